//! Domain types shared by every model: instances, scenario sets, parameters,
//! distributions and solve reports, plus their file I/O.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySpec;
use crate::analysis::{BoundsReport, PropertyReport};
use crate::error::{Error, Result};

/// Relative slack applied to every capacity comparison.
pub const CAPACITY_SLACK: f64 = 1e-9;

/// Tolerance on the unit sum of a probability vector.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Dense row-major matrix with explicit dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;
    fn try_from(r: MatrixRepr) -> std::result::Result<Self, String> {
        if r.rows * r.cols != r.data.len() {
            return Err(format!(
                "matrix declares {}x{} but holds {} entries",
                r.rows,
                r.cols,
                r.data.len()
            ));
        }
        Ok(Matrix {
            rows: r.rows,
            cols: r.cols,
            data: r.data,
        })
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    /// Builds from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::dim(format!("matrix row {i}"), c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Optional display names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<Vec<String>>,
}

/// Users, resources, capacities and the allocation box.
///
/// When `allocation_upper` is absent the box is derived from a scenario set
/// through [`ResourceInstance::box_upper`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceInstance {
    pub num_users: usize,
    pub num_resources: usize,
    pub capacities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation_upper: Option<Vec<f64>>,
    #[serde(default)]
    pub labels: Labels,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<AmbiguitySpec>,
}

#[derive(Deserialize)]
struct InstanceFile {
    #[serde(default)]
    num_users: Option<usize>,
    capacities: Vec<f64>,
    #[serde(default)]
    allocation_upper: Option<Vec<f64>>,
    #[serde(default)]
    labels: Labels,
    #[serde(default)]
    ambiguity: Option<AmbiguitySpec>,
}

impl ResourceInstance {
    /// Validated constructor.
    pub fn new(
        num_users: usize,
        capacities: Vec<f64>,
        allocation_upper: Option<Vec<f64>>,
    ) -> Result<Self> {
        let inst = ResourceInstance {
            num_users,
            num_resources: capacities.len(),
            capacities,
            allocation_upper,
            labels: Labels::default(),
            ambiguity: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::invalid("num_users", "must be at least 1"));
        }
        if self.num_resources == 0 || self.capacities.len() != self.num_resources {
            return Err(Error::invalid(
                "capacities",
                "need at least one resource and one capacity per resource",
            ));
        }
        for (i, &c) in self.capacities.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(
                    format!("capacities[{i}]"),
                    format!("capacity must be positive and finite, got {c}"),
                ));
            }
        }
        if let Some(ub) = &self.allocation_upper {
            if ub.len() != self.num_users {
                return Err(Error::dim("allocation_upper", self.num_users, ub.len()));
            }
            for (j, &u) in ub.iter().enumerate() {
                if !(u > 0.0 && u.is_finite()) {
                    return Err(Error::invalid(
                        format!("allocation_upper[{j}]"),
                        format!("bound must be positive and finite, got {u}"),
                    ));
                }
            }
        }
        if let Some(u) = &self.labels.users {
            if u.len() != self.num_users {
                return Err(Error::dim("labels.users", self.num_users, u.len()));
            }
        }
        if let Some(r) = &self.labels.resources {
            if r.len() != self.num_resources {
                return Err(Error::dim("labels.resources", self.num_resources, r.len()));
            }
        }
        Ok(())
    }

    /// The allocation box: the stored bound, or twice the tightest
    /// single-resource limit over the scenario set.
    pub fn box_upper(&self, scenarios: &ScenarioSet) -> Result<Vec<f64>> {
        self.check_scenarios(scenarios)?;
        if let Some(ub) = &self.allocation_upper {
            return Ok(ub.clone());
        }
        Ok(default_upper(&self.capacities, scenarios))
    }

    pub fn check_scenarios(&self, scenarios: &ScenarioSet) -> Result<()> {
        if scenarios.num_resources() != self.num_resources
            || scenarios.num_users() != self.num_users
        {
            return Err(Error::dim(
                "scenario set vs instance",
                format!("{}x{}", self.num_resources, self.num_users),
                format!("{}x{}", scenarios.num_resources(), scenarios.num_users()),
            ));
        }
        Ok(())
    }
}

/// x̄_j = 2 · min_i c_i / r̲_ij with r̲_ij the smallest positive requirement.
pub fn default_upper(capacities: &[f64], scenarios: &ScenarioSet) -> Vec<f64> {
    let (m, d) = (scenarios.num_resources(), scenarios.num_users());
    (0..d)
        .map(|j| {
            let mut best = f64::INFINITY;
            for i in 0..m {
                let rmin = scenarios
                    .iter()
                    .map(|s| s.get(i, j))
                    .filter(|&r| r > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if rmin.is_finite() {
                    best = best.min(capacities[i] / rmin);
                }
            }
            2.0 * best
        })
        .collect()
}

/// Finite, validated collection of requirement matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioSet {
    scenarios: Vec<Matrix>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Matrix>) -> Result<Self> {
        let first = scenarios
            .first()
            .ok_or_else(|| Error::invalid("scenarios", "need at least one scenario"))?;
        let (m, d) = (first.rows(), first.cols());
        if m == 0 || d == 0 {
            return Err(Error::invalid("scenarios", "empty requirement matrix"));
        }
        for (w, s) in scenarios.iter().enumerate() {
            if s.rows() != m || s.cols() != d {
                return Err(Error::dim(
                    format!("scenario {w}"),
                    format!("{m}x{d}"),
                    format!("{}x{}", s.rows(), s.cols()),
                ));
            }
            for (k, &v) in s.data().iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(
                        format!("scenario {w} entry ({}, {})", k / d, k % d),
                        format!("requirement must be finite and non-negative, got {v}"),
                    ));
                }
            }
            for j in 0..d {
                if (0..m).all(|i| s.get(i, j) == 0.0) {
                    return Err(Error::ZeroRequirement {
                        scenario: w,
                        user: j,
                    });
                }
            }
        }
        for a in 0..scenarios.len() {
            for b in a + 1..scenarios.len() {
                if scenarios[a] == scenarios[b] {
                    return Err(Error::invalid(
                        "scenarios",
                        format!("scenarios {a} and {b} are identical"),
                    ));
                }
            }
        }
        Ok(ScenarioSet { scenarios })
    }

    pub fn single(requirements: Matrix) -> Result<Self> {
        Self::new(vec![requirements])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }
    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
    #[inline]
    pub fn num_resources(&self) -> usize {
        self.scenarios[0].rows()
    }
    #[inline]
    pub fn num_users(&self) -> usize {
        self.scenarios[0].cols()
    }
    #[inline]
    pub fn get(&self, w: usize) -> &Matrix {
        &self.scenarios[w]
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.scenarios.iter()
    }
    pub fn matrices(&self) -> &[Matrix] {
        &self.scenarios
    }

    /// Dominant-requirement vectors μ^ω for every scenario.
    pub fn dominant(&self, instance: &ResourceInstance) -> Result<Vec<Vec<f64>>> {
        self.scenarios
            .iter()
            .map(|s| derive_shares(instance, s).map(|(_, mu)| mu))
            .collect()
    }

    /// Resource loads Σ_j r_ij^ω x_j, indexed [ω][i].
    pub fn loads(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.scenarios.iter().map(|s| load(s, x)).collect()
    }
}

impl<'de> Deserialize<'de> for ScenarioSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            scenarios: Vec<Matrix>,
        }
        let r = Repr::deserialize(de)?;
        ScenarioSet::new(r.scenarios).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for ResourceInstance {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let f = InstanceFile::deserialize(de)?;
        let d = f
            .num_users
            .or_else(|| f.allocation_upper.as_ref().map(Vec::len))
            .or_else(|| f.labels.users.as_ref().map(Vec::len))
            .ok_or_else(|| {
                serde::de::Error::custom(
                    "num_users missing: give num_users, allocation_upper or labels.users",
                )
            })?;
        let inst = ResourceInstance {
            num_users: d,
            num_resources: f.capacities.len(),
            capacities: f.capacities,
            allocation_upper: f.allocation_upper,
            labels: f.labels,
            ambiguity: f.ambiguity,
        };
        inst.validate().map_err(serde::de::Error::custom)?;
        Ok(inst)
    }
}

/// How λ is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Explicit,
    /// λ = (1−β)/β, the scale-cancelling choice.
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    pub beta: f64,
    pub lambda: f64,
    pub lambda_mode: LambdaMode,
    pub theta: f64,
    pub epsilon: f64,
}

impl FairnessParams {
    pub fn coupled(beta: f64, theta: f64, epsilon: f64) -> Self {
        FairnessParams {
            beta,
            lambda: (1.0 - beta) / beta,
            lambda_mode: LambdaMode::Coupled,
            theta,
            epsilon,
        }
    }

    pub fn explicit(beta: f64, lambda: f64, theta: f64, epsilon: f64) -> Self {
        FairnessParams {
            beta,
            lambda,
            lambda_mode: LambdaMode::Explicit,
            theta,
            epsilon,
        }
    }

    /// The λ actually used.
    pub fn effective_lambda(&self) -> f64 {
        match self.lambda_mode {
            LambdaMode::Explicit => self.lambda,
            LambdaMode::Coupled => (1.0 - self.beta) / self.beta,
        }
    }

    pub fn is_coupled_concave(&self) -> bool {
        self.beta > 1.0 && (self.effective_lambda() - (1.0 - self.beta) / self.beta).abs() < 1e-12
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        if self.lambda_mode == LambdaMode::Coupled {
            self.lambda = (1.0 - beta) / beta;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta.abs() > crate::fairness::MAX_ABS_BETA {
            return Err(Error::invalid(
                "beta",
                format!("|beta| must be at most {}", crate::fairness::MAX_ABS_BETA),
            ));
        }
        if self.lambda_mode == LambdaMode::Coupled && (self.beta == 1.0 || self.beta == 0.0) {
            return Err(Error::invalid(
                "beta",
                "coupled lambda needs beta outside {0, 1}",
            ));
        }
        if !self.effective_lambda().is_finite() {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid("theta", "must lie in [0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Jobs allocated per user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<f64>);

impl Allocation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn validate(&self, upper: &[f64]) -> Result<()> {
        if self.0.len() != upper.len() {
            return Err(Error::dim("allocation", upper.len(), self.0.len()));
        }
        for (j, (&x, &u)) in self.0.iter().zip(upper).enumerate() {
            if !(x >= 0.0 && x <= u * (1.0 + 1e-12)) {
                return Err(Error::invalid(
                    format!("allocation[{j}]"),
                    format!("{x} outside [0, {u}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Probability vector over a scenario set.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DiscreteDistribution(Vec<f64>);

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(de)?;
        DiscreteDistribution::new(v).map_err(serde::de::Error::custom)
    }
}

impl DiscreteDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("distribution", "empty probability vector"));
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(
                "distribution",
                "entries must be non-negative",
            ));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(
                "distribution",
                format!("entries sum to {s}, not 1"),
            ));
        }
        Ok(DiscreteDistribution(p))
    }

    /// Clips negatives and rescales; for solver output carrying round-off.
    pub fn from_raw(p: Vec<f64>) -> Result<Self> {
        let mut p: Vec<f64> = p.into_iter().map(|v| v.max(0.0)).collect();
        let s: f64 = p.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numerical("probability vector sums to zero".into()));
        }
        p.iter_mut().for_each(|v| *v /= s);
        Ok(DiscreteDistribution(p))
    }

    pub fn uniform(n: usize) -> Self {
        DiscreteDistribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        DiscreteDistribution(p)
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.0
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_variation(&self, other: &DiscreteDistribution) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fds,
    Ev,
    Robust,
    Saa,
    Sadr,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fds => "fds",
            ModelKind::Ev => "ev",
            ModelKind::Robust => "robust",
            ModelKind::Saa => "saa",
            ModelKind::Sadr => "sadr",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fds" => ModelKind::Fds,
            "ev" => ModelKind::Ev,
            "robust" => ModelKind::Robust,
            "saa" => ModelKind::Saa,
            "sadr" => ModelKind::Sadr,
            other => return Err(Error::invalid("model", format!("unknown model `{other}`"))),
        })
    }
}

/// Optimality evidence attached to SA-DR reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Final separation value g(x_T, p_T).
    pub separation: f64,
    pub epsilon: f64,
    /// True when every master solve was exact (enumerated patterns, concave
    /// objective).
    pub exact_master: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub model: ModelKind,
    pub allocation: Allocation,
    #[serde(default)]
    pub worst_case: Option<DiscreteDistribution>,
    pub objective: f64,
    #[serde(default)]
    pub master_level: Option<f64>,
    #[serde(default)]
    pub inner_value_history: Vec<f64>,
    pub iterations: usize,
    /// z_i^ω at the returned allocation, indexed [resource][scenario].
    pub scenario_pattern: Vec<Vec<bool>>,
    pub wall_time: f64,
    pub seed: u64,
    pub params: FairnessParams,
    #[serde(default)]
    pub certificate: Option<Certificate>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default)]
    pub properties: Option<PropertyReport>,
    #[serde(default)]
    pub bounds: Option<BoundsReport>,
}

impl SolveReport {
    pub fn validate(&self) -> Result<()> {
        if !self.objective.is_finite() {
            return Err(Error::invalid("objective", "must be finite"));
        }
        if self.model == ModelKind::Sadr && (self.worst_case.is_none() || self.iterations == 0) {
            return Err(Error::invalid(
                "worst_case",
                "an sadr report needs a worst-case distribution and at least one iteration",
            ));
        }
        Ok(())
    }

    pub fn x(&self) -> &[f64] {
        self.allocation.as_slice()
    }
}

/// Shares η_ij = r_ij / c_i and dominant requirements μ_j = max_i η_ij.
pub fn derive_shares(instance: &ResourceInstance, scenario: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let (m, d) = (instance.num_resources, instance.num_users);
    if scenario.rows() != m || scenario.cols() != d {
        return Err(Error::dim(
            "requirement matrix",
            format!("{m}x{d}"),
            format!("{}x{}", scenario.rows(), scenario.cols()),
        ));
    }
    let mut eta = Matrix::zeros(m, d);
    let mut mu = vec![0.0f64; d];
    for i in 0..m {
        let c = instance.capacities[i];
        for j in 0..d {
            let e = scenario.get(i, j) / c;
            eta.set(i, j, e);
            mu[j] = mu[j].max(e);
        }
    }
    if let Some(j) = mu.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroRequirement {
            scenario: 0,
            user: j,
        });
    }
    Ok((eta, mu))
}

/// Per-resource load Σ_j r_ij x_j.
pub fn load(scenario: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..scenario.rows())
        .map(|i| scenario.row(i).iter().zip(x).map(|(r, x)| r * x).sum())
        .collect()
}

#[inline]
pub(crate) fn fits(load: f64, capacity: f64) -> bool {
    load <= capacity * (1.0 + CAPACITY_SLACK)
}

/// Which resources have room for `x` under one realization.
pub fn capacity_satisfied(x: &[f64], scenario: &Matrix, capacities: &[f64]) -> Result<Vec<bool>> {
    if scenario.cols() != x.len() {
        return Err(Error::dim("allocation", scenario.cols(), x.len()));
    }
    if scenario.rows() != capacities.len() {
        return Err(Error::dim("capacities", scenario.rows(), capacities.len()));
    }
    Ok(load(scenario, x)
        .into_iter()
        .zip(capacities)
        .map(|(l, &c)| fits(l, c))
        .collect())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ResourceInstance> {
    parse_json(path.as_ref())
}

pub fn save_instance(instance: &ResourceInstance, path: impl AsRef<Path>) -> Result<()> {
    write_json(instance, path.as_ref())
}

pub fn save_report(report: &SolveReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path.as_ref())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<SolveReport> {
    let r: SolveReport = parse_json(path.as_ref())?;
    r.validate()?;
    Ok(r)
}
