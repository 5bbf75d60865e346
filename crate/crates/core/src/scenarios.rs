//! Scenario generation, trace ingestion and sample moments.
//!
//! Every generator draws from `ChaCha8Rng` seeded with `seed_from_u64`, so a
//! seed reproduces the same scenarios on any platform.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Labels, Matrix, ScenarioSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform {
        lower: Matrix,
        upper: Matrix,
    },
    Triangular {
        lower: Matrix,
        mode: Matrix,
        upper: Matrix,
    },
    /// `high` is drawn with probability `prob`, `low` otherwise.
    TwoPoint {
        low: Matrix,
        high: Matrix,
        prob: f64,
    },
    /// Uniform on the box ‖r − nominal‖∞ ≤ radius, clamped at zero.
    Box {
        nominal: Matrix,
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    pub count: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn with_count(&self, count: usize) -> Self {
        GeneratorSpec {
            count,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        let m = match &self.family {
            Family::Uniform { lower, .. } | Family::Triangular { lower, .. } => lower,
            Family::TwoPoint { low, .. } => low,
            Family::Box { nominal, .. } => nominal,
        };
        (m.rows(), m.cols())
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("count", "must be at least 1"));
        }
        let shape_err = |name: &str| Error::invalid(name, "matrix shapes differ");
        let nonneg = |name: &str, m: &Matrix| -> Result<()> {
            if m.data().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(
                    name,
                    "entries must be finite and non-negative",
                ));
            }
            Ok(())
        };
        match &self.family {
            Family::Uniform { lower, upper } => {
                if !lower.same_shape(upper) {
                    return Err(shape_err("upper"));
                }
                nonneg("lower", lower)?;
                nonneg("upper", upper)?;
                if lower.data().iter().zip(upper.data()).any(|(a, b)| b < a) {
                    return Err(Error::invalid("upper", "upper < lower"));
                }
            }
            Family::Triangular { lower, mode, upper } => {
                if !lower.same_shape(upper) || !lower.same_shape(mode) {
                    return Err(shape_err("mode"));
                }
                nonneg("lower", lower)?;
                nonneg("upper", upper)?;
                for ((a, c), b) in lower.data().iter().zip(mode.data()).zip(upper.data()) {
                    if !(a <= c && c <= b) {
                        return Err(Error::invalid("mode", "need lower <= mode <= upper"));
                    }
                }
                if lower == upper {
                    return Err(Error::invalid(
                        "upper",
                        "lower = upper everywhere leaves no randomness",
                    ));
                }
            }
            Family::TwoPoint { low, high, prob } => {
                if !low.same_shape(high) {
                    return Err(shape_err("high"));
                }
                nonneg("low", low)?;
                nonneg("high", high)?;
                if !(0.0..=1.0).contains(prob) {
                    return Err(Error::invalid("prob", "must lie in [0, 1]"));
                }
            }
            Family::Box { nominal, radius } => {
                nonneg("nominal", nominal)?;
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::invalid("radius", "must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

fn triangular(u: f64, a: f64, c: f64, b: f64) -> f64 {
    if b <= a {
        return a;
    }
    let fc = (c - a) / (b - a);
    if u < fc {
        a + (u * (b - a) * (c - a)).sqrt()
    } else {
        b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
    }
}

fn draw(family: &Family, rng: &mut ChaCha8Rng) -> Matrix {
    match family {
        Family::Uniform { lower, upper } => {
            let mut out = lower.clone();
            for i in 0..lower.rows() {
                for j in 0..lower.cols() {
                    let (a, b) = (lower.get(i, j), upper.get(i, j));
                    let u: f64 = rng.gen();
                    out.set(i, j, a + (b - a) * u);
                }
            }
            out
        }
        Family::Triangular { lower, mode, upper } => {
            let mut out = lower.clone();
            for i in 0..lower.rows() {
                for j in 0..lower.cols() {
                    let u: f64 = rng.gen();
                    out.set(
                        i,
                        j,
                        triangular(u, lower.get(i, j), mode.get(i, j), upper.get(i, j)),
                    );
                }
            }
            out
        }
        Family::TwoPoint { low, high, prob } => {
            let u: f64 = rng.gen();
            if u < *prob {
                high.clone()
            } else {
                low.clone()
            }
        }
        Family::Box { nominal, radius } => {
            let mut out = nominal.clone();
            for i in 0..nominal.rows() {
                for j in 0..nominal.cols() {
                    let u: f64 = rng.gen();
                    let v = nominal.get(i, j) + radius * (2.0 * u - 1.0);
                    out.set(i, j, v.max(0.0));
                }
            }
            out
        }
    }
}

/// Draws `spec.count` pairwise distinct scenarios.
pub fn generate(spec: &GeneratorSpec) -> Result<ScenarioSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::with_capacity(spec.count);
    let max_draws = 100 * spec.count;
    let mut draws = 0;
    while out.len() < spec.count {
        if draws >= max_draws {
            return Err(Error::DegenerateSupport {
                wanted: spec.count,
                draws,
            });
        }
        draws += 1;
        let s = draw(&spec.family, &mut rng);
        // -0.0 and 0.0 compare equal as matrices, so key on normalized bits.
        let key: Vec<u64> = s.data().iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key) {
            out.push(s);
        }
    }
    ScenarioSet::new(out)
}

/// Exact support of a two-point family with its branch weights, in the
/// order (low, high). Branches with zero weight are dropped.
pub fn two_point_support(
    low: &Matrix,
    high: &Matrix,
    prob: f64,
) -> Result<(ScenarioSet, DiscreteDistribution)> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid("prob", "must lie in [0, 1]"));
    }
    let mut mats = Vec::new();
    let mut w = Vec::new();
    if prob < 1.0 {
        mats.push(low.clone());
        w.push(1.0 - prob);
    }
    if prob > 0.0 {
        mats.push(high.clone());
        w.push(prob);
    }
    Ok((ScenarioSet::new(mats)?, DiscreteDistribution::new(w)?))
}

/// Weighted mean and population variance per entry; uniform weights when
/// none are given.
pub fn sample_moments(
    scenarios: &ScenarioSet,
    weights: Option<&DiscreteDistribution>,
) -> Result<(Matrix, Matrix)> {
    let n = scenarios.len();
    let uniform;
    let p = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::dim("weights", n, w.len()));
            }
            w
        }
        None => {
            uniform = DiscreteDistribution::uniform(n);
            &uniform
        }
    };
    let (m, d) = (scenarios.num_resources(), scenarios.num_users());
    let mut mean = Matrix::zeros(m, d);
    let mut var = Matrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            let mu: f64 = scenarios
                .iter()
                .zip(p.probs())
                .map(|(s, &pw)| pw * s.get(i, j))
                .sum();
            let v: f64 = scenarios
                .iter()
                .zip(p.probs())
                .map(|(s, &pw)| pw * (s.get(i, j) - mu).powi(2))
                .sum();
            mean.set(i, j, mu);
            var.set(i, j, v);
        }
    }
    Ok((mean, var))
}

/// A scenario set read from a long-format CSV trace.
#[derive(Clone, Debug)]
pub struct Trace {
    /// Sample mean of the scenarios, the nominal requirement matrix.
    pub baseline: Matrix,
    pub scenarios: ScenarioSet,
    pub scenario_ids: Vec<String>,
    pub users: Vec<String>,
    pub resources: Vec<String>,
}

impl Trace {
    pub fn labels(&self) -> Labels {
        Labels {
            users: Some(self.users.clone()),
            resources: Some(self.resources.clone()),
        }
    }
}

#[derive(Deserialize)]
struct TraceRow {
    scenario_id: String,
    user: String,
    resource: String,
    requirement: f64,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let (line, column) = e
        .position()
        .map(|p| (p.line() as usize, 0))
        .unwrap_or((0, 0));
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            reason: format!("{kind:?}"),
        },
    }
}

fn position_of(labels: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    if let Some(&k) = index.get(key) {
        return k;
    }
    labels.push(key.to_string());
    index.insert(key.to_string(), labels.len() - 1);
    labels.len() - 1
}

/// Reads `scenario_id,user,resource,requirement` rows. Scenarios come back
/// sorted by id (numerically when every id is an integer); users and
/// resources keep their order of first appearance.
pub fn ingest_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut users = Vec::new();
    let mut resources = Vec::new();
    let (mut uidx, mut ridx) = (HashMap::new(), HashMap::new());
    let mut cells: HashMap<String, HashMap<(usize, usize), f64>> = HashMap::new();
    for (k, rec) in rdr.deserialize::<TraceRow>().enumerate() {
        let row = rec.map_err(|e| csv_error(path, e))?;
        let line = k + 2;
        if !(row.requirement >= 0.0 && row.requirement.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: 4,
                reason: format!("negative or non-finite requirement {}", row.requirement),
            });
        }
        let j = position_of(&mut users, &mut uidx, &row.user);
        let i = position_of(&mut resources, &mut ridx, &row.resource);
        let grid = cells.entry(row.scenario_id.clone()).or_default();
        if grid.insert((i, j), row.requirement).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: 1,
                reason: format!(
                    "duplicate cell (scenario {}, user {}, resource {})",
                    row.scenario_id, row.user, row.resource
                ),
            });
        }
    }
    if cells.is_empty() {
        return Err(Error::invalid("trace", "no rows"));
    }
    let mut ids: Vec<String> = cells.keys().cloned().collect();
    let numeric: Option<Vec<i64>> = ids.iter().map(|s| s.parse().ok()).collect();
    match numeric {
        Some(_) => ids.sort_by_key(|s| s.parse::<i64>().unwrap_or(0)),
        None => ids.sort(),
    }
    let (m, d) = (resources.len(), users.len());
    let mut mats = Vec::with_capacity(ids.len());
    for id in &ids {
        let grid = &cells[id];
        let mut mat = Matrix::zeros(m, d);
        for j in 0..d {
            for i in 0..m {
                let v = grid.get(&(i, j)).ok_or_else(|| Error::MissingCell {
                    scenario: id.clone(),
                    user: users[j].clone(),
                    resource: resources[i].clone(),
                })?;
                mat.set(i, j, *v);
            }
        }
        mats.push(mat);
    }
    let scenarios = ScenarioSet::new(mats)?;
    let (baseline, _) = sample_moments(&scenarios, None)?;
    Ok(Trace {
        baseline,
        scenarios,
        scenario_ids: ids,
        users,
        resources,
    })
}

/// Writes a scenario set in the trace format with 1-based scenario ids.
pub fn write_scenarios_csv(
    scenarios: &ScenarioSet,
    labels: &Labels,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let users: Vec<String> = labels.users.clone().unwrap_or_else(|| {
        (1..=scenarios.num_users())
            .map(|j| format!("u{j}"))
            .collect()
    });
    let resources: Vec<String> = labels.resources.clone().unwrap_or_else(|| {
        (1..=scenarios.num_resources())
            .map(|i| format!("r{i}"))
            .collect()
    });
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let io = |e: csv::Error| csv_error(path, e);
    w.write_record(["scenario_id", "user", "resource", "requirement"])
        .map_err(io)?;
    for (k, s) in scenarios.iter().enumerate() {
        for j in 0..s.cols() {
            for i in 0..s.rows() {
                w.write_record([
                    (k + 1).to_string(),
                    users[j].clone(),
                    resources[i].clone(),
                    s.get(i, j).to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
