//! Bundled instances: the two-user datacenter toy, an Azure-like instance
//! with requirement ranges per user, and a CloudSim-like instance with
//! nominal demands.

use crate::ambiguity::MomentAmbiguity;
use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Labels, Matrix, ResourceInstance, ScenarioSet};
use crate::scenarios::{two_point_support, Family, GeneratorSpec};

/// User 2's (c, d) requirements in the low and high branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointConfig {
    pub low: (f64, f64),
    pub high: (f64, f64),
}

/// The three configurations sharing mean (3, 1) at probability 0.5, from
/// the widest spread to the narrowest.
pub const TWO_POINT_CONFIGS: [TwoPointConfig; 3] = [
    TwoPointConfig {
        low: (0.5, 0.5),
        high: (5.5, 1.5),
    },
    TwoPointConfig {
        low: (1.5, 0.5),
        high: (4.5, 1.5),
    },
    TwoPointConfig {
        low: (2.5, 0.5),
        high: (3.5, 1.5),
    },
];

fn labels(users: &[&str], resources: &[&str]) -> Labels {
    Labels {
        users: Some(users.iter().map(|s| s.to_string()).collect()),
        resources: Some(resources.iter().map(|s| s.to_string()).collect()),
    }
}

/// Capacities (9, 18), two users, box derived from the scenarios.
pub fn toy_instance() -> ResourceInstance {
    ResourceInstance::new(2, vec![9.0, 18.0], None)
        .and_then(|i| i.with_labels(labels(&["user1", "user2"], &["r1", "r2"])))
        .expect("static instance is valid")
}

/// Requirement matrix with user 1 fixed at (1, 4) and user 2 at (c, d).
pub fn toy_matrix(c: f64, d: f64) -> Matrix {
    Matrix::from_rows(&[vec![1.0, c], vec![4.0, d]]).expect("2x2")
}

/// Exact two-branch support (low, high) with P(high) = `prob`.
pub fn toy_scenarios(
    config: TwoPointConfig,
    prob: f64,
) -> Result<(ScenarioSet, DiscreteDistribution)> {
    two_point_support(
        &toy_matrix(config.low.0, config.low.1),
        &toy_matrix(config.high.0, config.high.1),
        prob,
    )
}

pub fn toy_generator(config: TwoPointConfig, prob: f64, count: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        family: Family::TwoPoint {
            low: toy_matrix(config.low.0, config.low.1),
            high: toy_matrix(config.high.0, config.high.1),
            prob,
        },
        count,
        seed,
    }
}

/// Per-user (cores lo, hi, CPU lo, hi, memory lo, hi).
const AZURE_RANGES: [[f64; 6]; 16] = [
    [3.0, 6.9, 81.0, 244.0, 3.3, 9.3],
    [0.9, 3.0, 69.0, 206.0, 5.0, 9.6],
    [0.9, 3.0, 91.0, 272.0, 4.2, 10.6],
    [3.1, 6.4, 67.0, 202.0, 1.8, 3.3],
    [1.7, 4.9, 90.0, 269.0, 4.0, 10.9],
    [1.2, 3.4, 59.0, 177.0, 4.2, 10.1],
    [3.5, 12.7, 50.0, 149.0, 3.8, 11.1],
    [0.7, 1.4, 35.0, 104.0, 2.4, 4.5],
    [0.6, 1.7, 48.0, 144.0, 5.8, 16.3],
    [0.5, 1.8, 19.0, 58.0, 2.9, 7.7],
    [1.7, 6.3, 81.0, 244.0, 2.3, 4.4],
    [0.8, 2.9, 93.0, 280.0, 1.7, 4.5],
    [0.4, 1.7, 30.0, 90.0, 3.8, 8.9],
    [1.6, 3.3, 51.0, 152.0, 2.9, 6.6],
    [0.8, 3.4, 98.0, 294.0, 4.0, 12.0],
    [0.5, 1.4, 88.0, 263.0, 4.2, 8.1],
];

/// Azure-like instance with capacities (320, 6400, 640) and the first `d`
/// users. Returns the instance and the lower/upper requirement matrices.
pub fn azure_like(d: usize) -> Result<(ResourceInstance, Matrix, Matrix)> {
    if d == 0 || d > AZURE_RANGES.len() {
        return Err(Error::invalid(
            "users",
            format!("must lie in 1..={}", AZURE_RANGES.len()),
        ));
    }
    let mut lo = Matrix::zeros(3, d);
    let mut hi = Matrix::zeros(3, d);
    for (j, r) in AZURE_RANGES.iter().take(d).enumerate() {
        for i in 0..3 {
            lo.set(i, j, r[2 * i]);
            hi.set(i, j, r[2 * i + 1]);
        }
    }
    let users: Vec<String> = (1..=d).map(|j| format!("user{j}")).collect();
    let inst = ResourceInstance::new(d, vec![320.0, 6400.0, 640.0], None)?.with_labels(Labels {
        users: Some(users),
        resources: Some(vec!["cores".into(), "cpu".into(), "memory".into()]),
    })?;
    Ok((inst, lo, hi))
}

/// Uniform or triangular (mode at the midpoint) generator over the
/// Azure-like ranges.
pub fn azure_generator(
    d: usize,
    triangular: bool,
    count: usize,
    seed: u64,
) -> Result<GeneratorSpec> {
    let (_, lower, upper) = azure_like(d)?;
    let family = if triangular {
        let mode = Matrix::new(
            lower.rows(),
            lower.cols(),
            lower
                .data()
                .iter()
                .zip(upper.data())
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )?;
        Family::Triangular { lower, mode, upper }
    } else {
        Family::Uniform { lower, upper }
    };
    Ok(GeneratorSpec {
        family,
        count,
        seed,
    })
}

/// Nominal (CPU, GPU, CPU memory, GPU memory) demand per job.
const CLOUDSIM_NOMINAL: [[f64; 4]; 10] = [
    [6.0, 35.0, 5.3, 123.0],
    [3.7, 41.0, 3.7, 41.0],
    [4.5, 37.0, 8.4, 75.0],
    [4.1, 87.0, 7.4, 99.0],
    [5.5, 33.0, 4.4, 139.0],
    [5.4, 37.0, 4.7, 119.0],
    [5.8, 34.0, 11.6, 136.0],
    [4.6, 50.0, 3.9, 35.0],
    [5.9, 37.0, 9.3, 61.0],
    [5.4, 62.0, 5.6, 51.0],
];

/// Ten users, capacities (80, 900, 160, 1800).
pub fn cloudsim_like() -> (ResourceInstance, Matrix) {
    let mut nominal = Matrix::zeros(4, 10);
    for (j, r) in CLOUDSIM_NOMINAL.iter().enumerate() {
        for (i, &v) in r.iter().enumerate() {
            nominal.set(i, j, v);
        }
    }
    let users: Vec<String> = (1..=10).map(|j| format!("user{j}")).collect();
    let inst = ResourceInstance::new(10, vec![80.0, 900.0, 160.0, 1800.0], None)
        .and_then(|i| {
            i.with_labels(Labels {
                users: Some(users),
                resources: Some(vec![
                    "CPU".into(),
                    "GPU".into(),
                    "CPU-mem".into(),
                    "GPU-mem".into(),
                ]),
            })
        })
        .expect("static instance is valid");
    (inst, nominal)
}

/// Triangular demands on [r̂ − ρ, r̂ + ρ] with mode r̂, clamped at zero.
pub fn cloudsim_generator(rho: f64, count: usize, seed: u64) -> GeneratorSpec {
    let (_, nominal) = cloudsim_like();
    GeneratorSpec {
        family: Family::Triangular {
            lower: nominal.map(|r| (r - rho).max(0.0)),
            mode: nominal.clone(),
            upper: nominal.map(|r| r + rho),
        },
        count,
        seed,
    }
}

/// Mean within [0.5 r̂, 1.5 r̂] and variance at most 1.5 ρ²/6, the
/// variance of the symmetric triangular law.
pub fn cloudsim_ambiguity(rho: f64) -> Result<MomentAmbiguity> {
    let (_, nominal) = cloudsim_like();
    let var = nominal.map(|_| rho * rho / 6.0);
    MomentAmbiguity::from_scaled(&nominal, &var, 0.5, 1.5, 1.5)
}

/// The box {r : |r − r̂|∞ ≤ ρ} as its two corners at equal weight. F grows
/// with every dominant share and the capacity rows grow with r, so robust
/// and mean-value models over the box reduce to these two scenarios.
pub fn cloudsim_box(rho: f64) -> Result<(ScenarioSet, DiscreteDistribution)> {
    let (_, nominal) = cloudsim_like();
    let lower = nominal.map(|r| (r - rho).max(0.0));
    let upper = nominal.map(|r| r + rho);
    Ok((
        ScenarioSet::new(vec![lower, upper])?,
        DiscreteDistribution::uniform(2),
    ))
}
