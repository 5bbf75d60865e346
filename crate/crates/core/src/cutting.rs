//! Cutting-surface driver for the SA-DR model.
//!
//! Each iteration solves the master over the collected distributions, then
//! looks for a distribution in the ambiguity set that separates the master
//! point. Two kinds of cut exist. A chance cut is a member of the set under
//! which some resource's satisfied mass falls below θ; an objective cut is
//! the worst-case distribution returned by the inner solver when it beats
//! the master level by more than ε/2. The loop stops when neither exists.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ambiguity::{is_eps_feasible, MomentAmbiguity};
use crate::error::{Error, Result};
use crate::inner::{chance_indicators, solve_inner_with, AnchoredSet, InnerOptions, InnerResult};
use crate::master::solve_master;
use crate::model::{
    Allocation, Certificate, DiscreteDistribution, FairnessParams, ModelKind, ResourceInstance,
    ScenarioSet, SolveReport,
};

/// Chance cuts are added when the satisfied mass falls below θ by more
/// than this.
pub const CHANCE_TOL: f64 = 1e-7;

/// Cuts closer than this in total variation count as duplicates.
pub const DUPLICATE_TV: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// No cut: the iteration terminated the loop.
    None,
    Objective,
    Chance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub iteration: usize,
    pub master_level: f64,
    /// g(x_t, p) for objective records; satisfied mass minus θ for chance
    /// records.
    pub separation_value: f64,
    pub distribution_added: bool,
    pub kind: CutKind,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutLog {
    pub records: Vec<CutRecord>,
}

impl CutLog {
    pub fn to_csv_string(&self) -> String {
        let mut s =
            String::from("iteration,level,separation_value,kind,distribution_added,wall_time\n");
        for r in &self.records {
            let kind = match r.kind {
                CutKind::None => "none",
                CutKind::Objective => "objective",
                CutKind::Chance => "chance",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration,
                r.master_level,
                r.separation_value,
                kind,
                r.distribution_added,
                r.wall_time
            ));
        }
        s
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_csv_string().as_bytes()).map_err(io)
    }

    /// Master levels of successive iterations never increase.
    pub fn levels_nonincreasing(&self, tol: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].master_level <= w[0].master_level + tol * (1.0 + w[0].master_level.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct SadrOptions {
    pub max_iterations: usize,
    pub inner: InnerOptions,
    /// Record wall-clock times; when false they are written as 0 so that
    /// repeated runs produce identical output.
    pub timing: bool,
    /// Extra starting cuts, e.g. from a previous solve in a sweep.
    pub initial_cuts: Vec<DiscreteDistribution>,
}

impl Default for SadrOptions {
    fn default() -> Self {
        SadrOptions {
            max_iterations: 200,
            inner: InnerOptions::default(),
            timing: false,
            initial_cuts: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SadrOutcome {
    pub report: SolveReport,
    pub log: CutLog,
    /// Every distribution in the final master.
    pub cuts: Vec<DiscreteDistribution>,
}

pub fn solve_sadr(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    params: &FairnessParams,
    seed: u64,
) -> Result<(SolveReport, CutLog)> {
    let out = solve_sadr_with(
        instance,
        scenarios,
        set,
        params,
        seed,
        &SadrOptions::default(),
    )?;
    Ok((out.report, out.log))
}

fn is_duplicate(p: &DiscreteDistribution, cuts: &[DiscreteDistribution]) -> bool {
    cuts.iter().any(|c| c.total_variation(p) <= DUPLICATE_TV)
}

/// Lowest satisfied mass over the ambiguity set for each violated resource;
/// returns the most violated one.
#[allow(clippy::too_many_arguments)]
fn chance_separation(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    set: &MomentAmbiguity,
    theta: f64,
    eps: f64,
    seed: u64,
    opts: &InnerOptions,
) -> Result<Option<(DiscreteDistribution, f64)>> {
    if theta <= 0.0 {
        return Ok(None);
    }
    let z = chance_indicators(x, scenarios, instance);
    let lp = AnchoredSet::new(scenarios, set, None);
    let mut best: Option<(DiscreteDistribution, f64)> = None;
    for (i, row) in z.iter().enumerate() {
        if row.iter().all(|&b| b) {
            continue;
        }
        let c: Vec<f64> = row.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let (p, _, _, _) = lp.minimize(&c, eps, seed.wrapping_add(i as u64), opts)?;
        let p = DiscreteDistribution::from_raw(p)?;
        let mass: f64 = c.iter().zip(p.probs()).map(|(a, b)| a * b).sum();
        if mass < theta - CHANCE_TOL && best.as_ref().is_none_or(|(_, m)| mass < *m) {
            best = Some((p, mass));
        }
    }
    Ok(best)
}

/// A starting member of the ambiguity set: uniform when it qualifies, else
/// the inner solver's restoration point.
fn initial_distribution(
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    eps: f64,
    seed: u64,
    opts: &InnerOptions,
) -> Result<DiscreteDistribution> {
    let u = DiscreteDistribution::uniform(scenarios.len());
    if is_eps_feasible(&u, scenarios, set, 1e-12)? {
        return Ok(u);
    }
    let lp = AnchoredSet::new(scenarios, set, None);
    let zero = vec![0.0; scenarios.len()];
    let (p, _, _, _) = lp.minimize(&zero, eps, seed, opts)?;
    DiscreteDistribution::from_raw(p)
}

pub fn solve_sadr_with(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    params: &FairnessParams,
    seed: u64,
    opts: &SadrOptions,
) -> Result<SadrOutcome> {
    params.validate()?;
    instance.check_scenarios(scenarios)?;
    let clock = Instant::now();
    let stamp = |c: &Instant| {
        if opts.timing {
            c.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let (beta, lambda, theta, eps) = (
        params.beta,
        params.effective_lambda(),
        params.theta,
        params.epsilon,
    );
    let mut cuts = vec![initial_distribution(
        scenarios,
        set,
        eps,
        seed,
        &opts.inner,
    )?];
    for c in &opts.initial_cuts {
        if c.len() == scenarios.len() && !is_duplicate(c, &cuts) {
            cuts.push(c.clone());
        }
    }
    let mut log = CutLog::default();
    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut exact = true;
    let mut last_gap = f64::NAN;
    for it in 1..=opts.max_iterations {
        let iter_seed = seed.wrapping_add(1_000_003 * it as u64);
        let master = solve_master(
            scenarios, instance, &cuts, theta, beta, lambda, eps, iter_seed,
        )?;
        exact &= master.exact;
        let x = master.x.clone();
        if let Some((p, mass)) = chance_separation(
            &x,
            scenarios,
            instance,
            set,
            theta,
            eps,
            iter_seed,
            &opts.inner,
        )? {
            let added = !is_duplicate(&p, &cuts);
            log.records.push(CutRecord {
                iteration: it,
                master_level: master.level,
                separation_value: mass - theta,
                distribution_added: added,
                kind: CutKind::Chance,
                wall_time: stamp(&clock),
            });
            if !added {
                return Err(Error::NonConvergence {
                    iterations: it,
                    gap: mass - theta,
                });
            }
            cuts.push(p);
            continue;
        }
        let inner: InnerResult = solve_inner_with(
            &x,
            scenarios,
            instance,
            set,
            theta,
            beta,
            lambda,
            eps / 2.0,
            iter_seed,
            &opts.inner,
        )?;
        history.push(inner.value);
        let g = inner.value - master.level;
        last_gap = g;
        let violated = g < -eps / 2.0;
        let duplicate = violated && is_duplicate(&inner.p, &cuts);
        log.records.push(CutRecord {
            iteration: it,
            master_level: master.level,
            separation_value: g,
            distribution_added: violated && !duplicate,
            kind: if violated && !duplicate {
                CutKind::Objective
            } else {
                CutKind::None
            },
            wall_time: stamp(&clock),
        });
        if violated && !duplicate {
            cuts.push(inner.p);
            continue;
        }
        if duplicate {
            diagnostics.push(format!(
                "stopped on a repeated cut with separation {g:.3e}; certificate is the current gap"
            ));
        }
        if !exact {
            diagnostics.push(
                "master solved heuristically (objective not concave or patterns not enumerated)"
                    .into(),
            );
        }
        if inner.feasibility_eps > 0.0 {
            diagnostics.push(format!(
                "worst-case distribution violates the moment set by {:.3e}",
                inner.feasibility_eps
            ));
        }
        let report = SolveReport {
            model: ModelKind::Sadr,
            allocation: Allocation(x.clone()),
            worst_case: Some(inner.p),
            objective: inner.value,
            master_level: Some(master.level),
            inner_value_history: history,
            iterations: it,
            scenario_pattern: chance_indicators(&x, scenarios, instance),
            wall_time: stamp(&clock),
            seed,
            params: *params,
            certificate: Some(Certificate {
                separation: g,
                epsilon: eps,
                exact_master: exact,
            }),
            diagnostics,
            properties: None,
            bounds: None,
        };
        return Ok(SadrOutcome { report, log, cuts });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        gap: last_gap,
    })
}

/// Re-solves the separation at the reported point with an independent
/// seed. Returns g = value − level and whether g ≥ −ε with no member of the
/// set pushing a satisfied mass below θ − ε.
pub fn verify_certificate(
    report: &SolveReport,
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    params: &FairnessParams,
    fresh_seed: u64,
) -> Result<(f64, bool)> {
    let x = report.x();
    let level = report.master_level.unwrap_or(report.objective);
    let inner = solve_inner_with(
        x,
        scenarios,
        instance,
        set,
        params.theta,
        params.beta,
        params.effective_lambda(),
        params.epsilon / 2.0,
        fresh_seed,
        &InnerOptions::default(),
    );
    // No member of the set meets the chance rows at x: the certificate fails outright.
    let inner = match inner {
        Err(Error::InfeasibleInner(_)) => return Ok((f64::NEG_INFINITY, false)),
        r => r?,
    };
    let g = inner.value - level;
    let chance = chance_separation(
        x,
        scenarios,
        instance,
        set,
        params.theta,
        params.epsilon,
        fresh_seed,
        &InnerOptions::default(),
    )?;
    let chance_ok = chance.is_none_or(|(_, mass)| mass >= params.theta - params.epsilon);
    Ok((g, g >= -params.epsilon && chance_ok))
}
