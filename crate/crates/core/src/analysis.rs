//! Post-hoc property checks, β sweeps and statistical bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySpec;
use crate::baselines::solve_saa;
use crate::cutting::{solve_sadr_with, SadrOptions};
use crate::error::{Error, Result};
use crate::fairness::{eval_coupled, eval_fairness, eval_special, Regime};
use crate::inner::{scenario_values, solve_inner};
use crate::model::{
    derive_shares, DiscreteDistribution, FairnessParams, ResourceInstance, ScenarioSet, SolveReport,
};
use crate::par;
use crate::scenarios::{generate, GeneratorSpec};

/// Normal 0.05 critical value used by the point lower bound.
pub const Z_CRIT: f64 = 1.64;
/// t critical value with 4 degrees of freedom (five replicates).
pub const T_CRIT_4: f64 = 2.13;
pub const DEFAULT_REPLICATES: usize = 5;
pub const DEFAULT_PARETO_TRIALS: usize = 200;

const SHARING_TOL: f64 = 1e-8;
const ENVY_TOL: f64 = 1e-12;

/// One-sided 0.05 critical values of Student's t for ν = 1..=30.
const T_TABLE: [f64; 30] = [
    6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812, 1.796, 1.782, 1.771,
    1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725, 1.721, 1.717, 1.714, 1.711, 1.708, 1.706,
    1.703, 1.701, 1.699, 1.697,
];

/// t_{0.05,ν}; ν = 4 returns the two-decimal constant [`T_CRIT_4`].
pub fn t_critical(nu: usize) -> Result<f64> {
    match nu {
        4 => Ok(T_CRIT_4),
        1..=30 => Ok(T_TABLE[nu - 1]),
        _ => Err(Error::invalid(
            "replicates",
            "degrees of freedom must lie in 1..=30",
        )),
    }
}

/// |L − U| / |point| · 100.
pub fn relative_gap(lower: f64, upper: f64, point: f64) -> f64 {
    (lower - upper).abs() / point.abs() * 100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharingIncentive {
    /// Σ_ω p̂^ω μ_j^ω x_j per user.
    pub values: Vec<f64>,
    pub threshold: f64,
    pub pass: Vec<bool>,
}

impl SharingIncentive {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&b| b)
    }
}

/// User `envious` envies `envied`: η_ik x_k ≥ η_ij x_j everywhere, strictly
/// at (`scenario`, `resource`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvyWitness {
    pub envious: usize,
    pub envied: usize,
    pub scenario: usize,
    pub resource: usize,
    /// η_ik x_k at the witness.
    pub envied_share: f64,
    /// η_ij x_j at the witness.
    pub own_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoSpot {
    pub trials: usize,
    pub skipped: usize,
    pub violations: usize,
    pub guarantee_applicable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub sharing_incentive: SharingIncentive,
    pub envy: Vec<EnvyWitness>,
    pub pareto_spot: ParetoSpot,
}

impl PropertyReport {
    /// Sharing incentive and envy freeness hold, and the Pareto spot check
    /// found nothing wherever its guarantee applies.
    pub fn passed(&self) -> bool {
        self.sharing_incentive.all_pass()
            && self.envy.is_empty()
            && (!self.pareto_spot.guarantee_applicable || self.pareto_spot.violations == 0)
    }
}

pub fn check_sharing_incentive(
    x: &[f64],
    scenarios: &ScenarioSet,
    p_hat: &DiscreteDistribution,
    instance: &ResourceInstance,
) -> Result<SharingIncentive> {
    instance.check_scenarios(scenarios)?;
    if p_hat.len() != scenarios.len() {
        return Err(Error::dim("distribution", scenarios.len(), p_hat.len()));
    }
    let d = instance.num_users;
    let mus = scenarios.dominant(instance)?;
    let mut values = vec![0.0; d];
    for (mu, &p) in mus.iter().zip(p_hat.probs()) {
        for j in 0..d {
            values[j] += p * mu[j] * x[j];
        }
    }
    let threshold = 1.0 / d as f64;
    let pass = values
        .iter()
        .map(|&v| v >= threshold - SHARING_TOL)
        .collect();
    Ok(SharingIncentive {
        values,
        threshold,
        pass,
    })
}

pub fn check_envy(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
) -> Result<Vec<EnvyWitness>> {
    instance.check_scenarios(scenarios)?;
    let d = instance.num_users;
    let etas: Vec<_> = scenarios
        .iter()
        .map(|s| derive_shares(instance, s).map(|(eta, _)| eta))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for j in 0..d {
        for k in 0..d {
            if j == k {
                continue;
            }
            let mut dominated = true;
            let mut witness = None;
            'outer: for (w, eta) in etas.iter().enumerate() {
                for i in 0..instance.num_resources {
                    let theirs = eta.get(i, k) * x[k];
                    let own = eta.get(i, j) * x[j];
                    let tol = ENVY_TOL * theirs.abs().max(own.abs()).max(1e-300);
                    if theirs < own - tol {
                        dominated = false;
                        break 'outer;
                    }
                    if theirs > own + tol && witness.is_none() {
                        witness = Some((w, i, theirs, own));
                    }
                }
            }
            if let (true, Some((scenario, resource, envied_share, own_share))) =
                (dominated, witness)
            {
                out.push(EnvyWitness {
                    envious: j,
                    envied: k,
                    scenario,
                    resource,
                    envied_share,
                    own_share,
                });
            }
        }
    }
    Ok(out)
}

/// Samples allocations dominated by `x` and counts scenarios where the
/// dominated allocation does at least as well.
pub fn check_pareto_spot(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    params: &FairnessParams,
    trials: usize,
    seed: u64,
) -> Result<ParetoSpot> {
    instance.check_scenarios(scenarios)?;
    let (beta, lambda) = (params.beta, params.effective_lambda());
    let coupled = (1.0 - beta) / beta;
    let guarantee_applicable = beta != 0.0 && lambda.abs() >= coupled.abs() - 1e-15;
    let mus = scenarios.dominant(instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut skipped, mut violations) = (0, 0);
    for _ in 0..trials {
        let y: Vec<f64> = x
            .iter()
            .map(|&v| {
                if rng.gen_bool(0.5) {
                    v
                } else {
                    v * rng.gen_range(0.5..1.0)
                }
            })
            .collect();
        if y.iter().zip(x).all(|(a, b)| a == b) || y.iter().all(|&v| v <= 0.0) {
            skipped += 1;
            continue;
        }
        for mu in &mus {
            let fx = eval_fairness(x, mu, beta, lambda)?.value;
            let fy = eval_fairness(&y, mu, beta, lambda)?.value;
            if !(fx > fy) {
                violations += 1;
                break;
            }
        }
    }
    Ok(ParetoSpot {
        trials,
        skipped,
        violations,
        guarantee_applicable,
    })
}

/// All three checks for a stored report; the sharing-incentive weights are
/// the worst-case distribution when present, uniform otherwise.
pub fn check_properties(
    report: &SolveReport,
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    trials: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let p = report
        .worst_case
        .clone()
        .unwrap_or_else(|| DiscreteDistribution::uniform(scenarios.len()));
    Ok(PropertyReport {
        sharing_incentive: check_sharing_incentive(report.x(), scenarios, &p, instance)?,
        envy: check_envy(report.x(), scenarios, instance)?,
        pareto_spot: check_pareto_spot(
            report.x(),
            scenarios,
            instance,
            &report.params,
            trials,
            seed,
        )?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSweep {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    /// True when values never increase by more than 1e−3 relative.
    pub monotone: bool,
}

pub const SWEEP_SLACK: f64 = 1e-3;

/// Optimal values over increasing β.
pub fn beta_sweep<F>(betas: &[f64], mut solve: F) -> Result<BetaSweep>
where
    F: FnMut(f64) -> Result<f64>,
{
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("betas", "must be strictly increasing"));
    }
    if betas.iter().any(|&b| b <= 1.0) {
        return Err(Error::invalid("betas", "every beta must exceed 1"));
    }
    let values = betas
        .iter()
        .map(|&b| solve(b))
        .collect::<Result<Vec<_>>>()?;
    let monotone = values
        .windows(2)
        .all(|w| w[1] <= w[0] + SWEEP_SLACK * w[0].abs().max(1e-12));
    Ok(BetaSweep {
        betas: betas.to_vec(),
        values,
        monotone,
    })
}

/// Coupled value at β against the max-ratio closed form with the same λ,
/// both averaged under `p`. Returns (coupled, closed form).
pub fn max_ratio_proxy(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    p: &DiscreteDistribution,
    beta: f64,
) -> Result<(f64, f64)> {
    let mus = scenarios.dominant(instance)?;
    let lambda = (1.0 - beta) / beta;
    let (mut a, mut b) = (0.0, 0.0);
    for (mu, &q) in mus.iter().zip(p.probs()) {
        if q == 0.0 {
            continue;
        }
        a += q * eval_coupled(x, mu, beta)?;
        b += q * eval_special(x, mu, Regime::MaxRatioInf, lambda)?;
    }
    Ok((a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    /// Lower bound from an evaluation sample at the first replicate's
    /// solution, upper bound from replicate SAA optima.
    SaaPoint,
    /// Both bounds from replicated SA-DR solves and worst-case evaluations.
    DrReplicate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub mode: BoundsMode,
    pub lower: f64,
    pub upper: f64,
    /// Objective of the first replicate, the denominator of the gap.
    pub point: f64,
    pub gap_percent: f64,
    pub replicates: usize,
    /// Optimal value of each replicate.
    pub replicate_values: Vec<f64>,
    /// Values averaged by the lower bound: per-scenario F for the point
    /// mode, per-replicate worst-case values for the replicate mode.
    pub lower_values: Vec<f64>,
    pub z_critical: f64,
    pub t_critical: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
}

/// Model whose bounds are estimated.
#[derive(Clone, Debug)]
pub enum BoundsModel {
    Saa,
    Sadr(AmbiguitySpec),
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|a| (a - mean) * (a - mean)).sum();
    (mean, (ss / (n * (n - 1.0))).sqrt())
}

fn replicate_seed(base: u64, m: usize, stream: u64) -> u64 {
    base.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(m as u64 * 7919)
}

fn solve_model(
    model: &BoundsModel,
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    params: &FairnessParams,
    seed: u64,
) -> Result<SolveReport> {
    match model {
        BoundsModel::Saa => solve_saa(instance, scenarios, params, seed),
        BoundsModel::Sadr(spec) => {
            let set = spec.resolve(scenarios)?;
            Ok(solve_sadr_with(
                instance,
                scenarios,
                &set,
                params,
                seed,
                &SadrOptions::default(),
            )?
            .report)
        }
    }
}

/// Replicated confidence bounds. Replicates are independent samples from
/// `generator` with derived seeds, solved in parallel.
pub fn confidence_bounds(
    model: &BoundsModel,
    instance: &ResourceInstance,
    generator: &GeneratorSpec,
    params: &FairnessParams,
    replicates: usize,
    mode: BoundsMode,
) -> Result<BoundsReport> {
    if replicates < 2 {
        return Err(Error::invalid("replicates", "need at least 2"));
    }
    let t = t_critical(replicates - 1)?;
    let base = generator.seed;
    let solved = par::map_indexed(replicates, |m| {
        let scen = generate(&generator.with_seed(replicate_seed(base, m, 1)))?;
        let rep = solve_model(model, instance, &scen, params, replicate_seed(base, m, 2))?;
        Ok::<_, Error>((scen, rep))
    });
    let solved: Vec<(ScenarioSet, SolveReport)> = solved.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = solved.iter().map(|(_, r)| r.objective).collect();
    let (vbar, sigma_upper) = mean_and_se(&values);
    let upper = vbar + t * sigma_upper;
    let x_hat = solved[0].1.x().to_vec();
    let point = values[0];
    let (beta, lambda) = (params.beta, params.effective_lambda());
    let (lower, lower_values, sigma_lower, z) = match mode {
        BoundsMode::SaaPoint => {
            let eval = generate(&generator.with_seed(replicate_seed(base, 0, 3)))?;
            let f = scenario_values(&x_hat, &eval, instance, beta, lambda)?;
            let (fbar, se) = mean_and_se(&f);
            (fbar - Z_CRIT * se, f, se, Z_CRIT)
        }
        BoundsMode::DrReplicate => {
            let BoundsModel::Sadr(spec) = model else {
                return Err(Error::invalid("mode", "dr_replicate needs the sadr model"));
            };
            let q = par::map_indexed(replicates, |m| {
                let scen = generate(&generator.with_seed(replicate_seed(base, m, 4)))?;
                let set = spec.resolve(&scen)?;
                let r = solve_inner(
                    &x_hat,
                    &scen,
                    instance,
                    &set,
                    0.0,
                    beta,
                    lambda,
                    params.epsilon / 2.0,
                    replicate_seed(base, m, 5),
                )?;
                Ok::<_, Error>(r.value)
            });
            let q: Vec<f64> = q.into_iter().collect::<Result<_>>()?;
            let (qbar, se) = mean_and_se(&q);
            (qbar - t * se, q, se, Z_CRIT)
        }
    };
    Ok(BoundsReport {
        mode,
        lower,
        upper,
        point,
        gap_percent: relative_gap(lower, upper, point),
        replicates,
        replicate_values: values,
        lower_values,
        z_critical: z,
        t_critical: t,
        sigma_lower,
        sigma_upper,
    })
}
