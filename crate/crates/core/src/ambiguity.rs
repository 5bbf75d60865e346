//! Moment ambiguity sets over a scenario support and membership checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Matrix, ScenarioSet};
use crate::scenarios::sample_moments;

/// Mean intervals and variance caps, one entry per (resource, user).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentAmbiguity {
    pub mean_lower: Matrix,
    pub mean_upper: Matrix,
    pub variance_upper: Matrix,
}

/// How an instance file describes its ambiguity set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbiguitySpec {
    Explicit(MomentAmbiguity),
    /// Scale the sample moments of the scenario set by Δ.
    Delta {
        delta: f64,
    },
}

impl AmbiguitySpec {
    pub fn resolve(&self, scenarios: &ScenarioSet) -> Result<MomentAmbiguity> {
        match self {
            AmbiguitySpec::Explicit(set) => {
                set.validate()?;
                Ok(set.clone())
            }
            AmbiguitySpec::Delta { delta } => {
                let (mean, var) = sample_moments(scenarios, None)?;
                MomentAmbiguity::from_moments(&mean, &var, *delta)
            }
        }
    }
}

/// Signed slacks for one (resource, user) entry; negative means violated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub variance: f64,
}

impl Slack {
    pub fn min(&self) -> f64 {
        self.mean_lower.min(self.mean_upper).min(self.variance)
    }
}

impl MomentAmbiguity {
    pub fn new(mean_lower: Matrix, mean_upper: Matrix, variance_upper: Matrix) -> Result<Self> {
        let s = MomentAmbiguity {
            mean_lower,
            mean_upper,
            variance_upper,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_lower.same_shape(&self.mean_upper)
            || !self.mean_lower.same_shape(&self.variance_upper)
        {
            return Err(Error::invalid("ambiguity", "matrix shapes differ"));
        }
        for (a, b) in self.mean_lower.data().iter().zip(self.mean_upper.data()) {
            if !(a <= b) {
                return Err(Error::invalid(
                    "mean_upper",
                    "mean_lower exceeds mean_upper",
                ));
            }
        }
        if self.variance_upper.data().iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid(
                "variance_upper",
                "caps must be non-negative",
            ));
        }
        Ok(())
    }

    /// (1−Δ)u ≤ Σ p r ≤ (1+Δ)u and variance ≤ (1+Δ)σ².
    pub fn from_moments(mean: &Matrix, variance: &Matrix, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", "must be finite and non-negative"));
        }
        Self::from_scaled(mean, variance, 1.0 - delta, 1.0 + delta, 1.0 + delta)
    }

    /// Generic scaling: `lo·u ≤ Σ p r ≤ hi·u`, variance ≤ `var·σ²`.
    pub fn from_scaled(
        mean: &Matrix,
        variance: &Matrix,
        lo: f64,
        hi: f64,
        var: f64,
    ) -> Result<Self> {
        if !mean.same_shape(variance) {
            return Err(Error::invalid("variance", "shape differs from mean"));
        }
        if mean.data().iter().any(|v| *v < 0.0) || variance.data().iter().any(|v| *v < 0.0) {
            return Err(Error::invalid(
                "moments",
                "mean and variance must be non-negative",
            ));
        }
        Self::new(
            mean.map(|u| (lo * u).max(0.0)),
            mean.map(|u| hi * u),
            variance.map(|s| var * s),
        )
    }

    /// A set that every distribution on the support satisfies: entrywise
    /// [min r, max r] and the Popoviciu cap (max − min)²/4.
    pub fn vacuous(scenarios: &ScenarioSet) -> Self {
        let (m, d) = (scenarios.num_resources(), scenarios.num_users());
        let mut lo = Matrix::zeros(m, d);
        let mut hi = Matrix::zeros(m, d);
        let mut var = Matrix::zeros(m, d);
        for i in 0..m {
            for j in 0..d {
                let (a, b) = scenarios
                    .iter()
                    .map(|s| s.get(i, j))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                        (a.min(v), b.max(v))
                    });
                lo.set(i, j, a);
                hi.set(i, j, b);
                var.set(i, j, 0.25 * (b - a) * (b - a));
            }
        }
        MomentAmbiguity {
            mean_lower: lo,
            mean_upper: hi,
            variance_upper: var,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.mean_lower.rows(), self.mean_lower.cols())
    }

    fn check(&self, scenarios: &ScenarioSet) -> Result<()> {
        if self.shape() != (scenarios.num_resources(), scenarios.num_users()) {
            return Err(Error::dim(
                "ambiguity set vs scenarios",
                format!("{:?}", self.shape()),
                format!("{}x{}", scenarios.num_resources(), scenarios.num_users()),
            ));
        }
        Ok(())
    }
}

/// Slacks of `p` against every moment constraint, row-major over (i, j).
pub fn membership_slacks(
    p: &DiscreteDistribution,
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
) -> Result<Vec<Slack>> {
    set.check(scenarios)?;
    if p.len() != scenarios.len() {
        return Err(Error::dim("distribution", scenarios.len(), p.len()));
    }
    let (mean, var) = sample_moments(scenarios, Some(p))?;
    let (m, d) = set.shape();
    let mut out = Vec::with_capacity(m * d);
    for i in 0..m {
        for j in 0..d {
            let u = mean.get(i, j);
            out.push(Slack {
                mean_lower: u - set.mean_lower.get(i, j),
                mean_upper: set.mean_upper.get(i, j) - u,
                variance: set.variance_upper.get(i, j) - var.get(i, j),
            });
        }
    }
    Ok(out)
}

/// Smallest slack over all constraints.
pub fn worst_slack(slacks: &[Slack]) -> f64 {
    slacks.iter().map(Slack::min).fold(f64::INFINITY, f64::min)
}

pub fn is_eps_feasible(
    p: &DiscreteDistribution,
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    eps: f64,
) -> Result<bool> {
    Ok(worst_slack(&membership_slacks(p, scenarios, set)?) >= -eps)
}

/// True when every point mass meets the mean bounds and the variance caps
/// dominate the largest variance any distribution on the support can have.
pub fn is_vacuous(set: &MomentAmbiguity, scenarios: &ScenarioSet) -> bool {
    if set.check(scenarios).is_err() {
        return false;
    }
    let (m, d) = set.shape();
    for i in 0..m {
        for j in 0..d {
            let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
            for s in scenarios.iter() {
                let r = s.get(i, j);
                if r < set.mean_lower.get(i, j) || r > set.mean_upper.get(i, j) {
                    return false;
                }
                a = a.min(r);
                b = b.max(r);
            }
            if set.variance_upper.get(i, j) < 0.25 * (b - a) * (b - a) {
                return false;
            }
        }
    }
    true
}
