//! Comparison models built on the fixed-pattern program engine: the
//! expected-value model, the robust model, sample average approximation and
//! the deterministic model.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fairness::{eval_fairness, expected_fairness};
use crate::inner::{chance_indicators, scenario_values};
use crate::master::{dist_term, solve_program, ProgramSpec};
use crate::model::{
    derive_shares, load, Allocation, DiscreteDistribution, FairnessParams, Matrix, ModelKind,
    ResourceInstance, ScenarioSet, SolveReport,
};
use crate::nlp::Term;

#[derive(Clone, Debug, Default)]
pub struct EvOptions {
    /// Use Prob ≥ 1 − θ in the chance constraint instead of Prob ≥ θ.
    pub printed_form: bool,
    pub timing: bool,
}

/// Σ_ω p^ω r^ω.
pub fn mean_requirements(scenarios: &ScenarioSet, p: &DiscreteDistribution) -> Result<Matrix> {
    if p.len() != scenarios.len() {
        return Err(Error::dim("distribution", scenarios.len(), p.len()));
    }
    let (m, d) = (scenarios.num_resources(), scenarios.num_users());
    let mut out = Matrix::zeros(m, d);
    for (s, &q) in scenarios.iter().zip(p.probs()) {
        for i in 0..m {
            for j in 0..d {
                out.set(i, j, out.get(i, j) + q * s.get(i, j));
            }
        }
    }
    Ok(out)
}

fn concave(params: &FairnessParams) -> bool {
    params.beta > 1.0
        && (params.effective_lambda() - (1.0 - params.beta) / params.beta).abs() < 1e-12
}

#[allow(clippy::too_many_arguments)]
fn run(
    model: ModelKind,
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    mus: Vec<Vec<f64>>,
    terms: Vec<Term>,
    chance: DiscreteDistribution,
    theta: f64,
    params: &FairnessParams,
    seed: u64,
    timing: bool,
    objective: impl Fn(&[f64]) -> Result<f64>,
) -> Result<SolveReport> {
    params.validate()?;
    instance.check_scenarios(scenarios)?;
    if params.beta == 0.0 {
        return Err(Error::invalid("beta", "optimization needs beta != 0"));
    }
    let clock = Instant::now();
    let spec = ProgramSpec {
        instance,
        scenarios,
        upper: instance.box_upper(scenarios)?,
        mus,
        terms,
        chance_dists: vec![chance],
        theta,
        beta: params.beta,
        lambda: params.effective_lambda(),
        concave: concave(params),
        seed,
    };
    let r = solve_program(&spec)?;
    let value = objective(&r.x)?;
    if !value.is_finite() {
        return Err(Error::InfeasibleModel(format!(
            "{} objective is not finite",
            model.name()
        )));
    }
    let mut diagnostics = Vec::new();
    if !r.exact {
        diagnostics.push(
            "solution is a local optimum: objective not concave or patterns not enumerated".into(),
        );
    }
    Ok(SolveReport {
        model,
        scenario_pattern: chance_indicators(&r.x, scenarios, instance),
        allocation: Allocation(r.x),
        worst_case: None,
        objective: value,
        master_level: Some(r.level),
        inner_value_history: Vec::new(),
        iterations: r.solves,
        wall_time: if timing {
            clock.elapsed().as_secs_f64()
        } else {
            0.0
        },
        seed,
        params: *params,
        certificate: None,
        diagnostics,
        properties: None,
        bounds: None,
    })
}

/// Maximizes F(x, E_p[ξ]) under chance constraints evaluated with `truth_p`.
pub fn solve_ev(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    truth_p: &DiscreteDistribution,
    params: &FairnessParams,
    seed: u64,
) -> Result<SolveReport> {
    solve_ev_with(
        instance,
        scenarios,
        truth_p,
        params,
        seed,
        &EvOptions::default(),
    )
}

pub fn solve_ev_with(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    truth_p: &DiscreteDistribution,
    params: &FairnessParams,
    seed: u64,
    opts: &EvOptions,
) -> Result<SolveReport> {
    let mean = mean_requirements(scenarios, truth_p)?;
    let (_, mu) = derive_shares(instance, &mean)?;
    let theta = if opts.printed_form {
        1.0 - params.theta
    } else {
        params.theta
    };
    let (beta, lambda) = (params.beta, params.effective_lambda());
    let mu_eval = mu.clone();
    run(
        ModelKind::Ev,
        instance,
        scenarios,
        vec![mu],
        vec![Term {
            weights: vec![(0, 1.0)],
        }],
        truth_p.clone(),
        theta,
        params,
        seed,
        opts.timing,
        move |x| Ok(eval_fairness(x, &mu_eval, beta, lambda)?.value),
    )
}

/// Maximizes min_ω F(x, ξ^ω) subject to every scenario's capacity rows.
pub fn solve_robust(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    params: &FairnessParams,
    seed: u64,
) -> Result<SolveReport> {
    let mus = scenarios.dominant(instance)?;
    let terms = (0..scenarios.len())
        .map(|w| Term {
            weights: vec![(w, 1.0)],
        })
        .collect();
    let (beta, lambda) = (params.beta, params.effective_lambda());
    run(
        ModelKind::Robust,
        instance,
        scenarios,
        mus,
        terms,
        DiscreteDistribution::uniform(scenarios.len()),
        1.0,
        params,
        seed,
        false,
        |x| {
            let v = scenario_values(x, scenarios, instance, beta, lambda)?;
            Ok(v.into_iter().fold(f64::INFINITY, f64::min))
        },
    )
}

/// Maximizes the uniform average of F over the scenarios with chance
/// constraints at uniform weights.
pub fn solve_saa(
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    params: &FairnessParams,
    seed: u64,
) -> Result<SolveReport> {
    let u = DiscreteDistribution::uniform(scenarios.len());
    let mus = scenarios.dominant(instance)?;
    let (beta, lambda) = (params.beta, params.effective_lambda());
    let uu = u.clone();
    run(
        ModelKind::Saa,
        instance,
        scenarios,
        mus,
        vec![dist_term(&u)],
        u,
        params.theta,
        params,
        seed,
        false,
        move |x| expected_fairness(x, scenarios, instance, &uu, beta, lambda),
    )
}

/// Deterministic model for a single requirement matrix.
pub fn solve_fds(
    instance: &ResourceInstance,
    requirements: &Matrix,
    params: &FairnessParams,
    seed: u64,
) -> Result<SolveReport> {
    let single = ScenarioSet::single(requirements.clone())?;
    let (_, mu) = derive_shares(instance, requirements)?;
    let (beta, lambda) = (params.beta, params.effective_lambda());
    let mu_eval = mu.clone();
    run(
        ModelKind::Fds,
        instance,
        &single,
        vec![mu],
        vec![Term {
            weights: vec![(0, 1.0)],
        }],
        DiscreteDistribution::uniform(1),
        1.0,
        params,
        seed,
        false,
        move |x| Ok(eval_fairness(x, &mu_eval, beta, lambda)?.value),
    )
}

/// Expected unused capacity per resource, E_p[max(0, c_i − Σ_j r_ij x_j)].
pub fn leftovers(
    report: &SolveReport,
    instance: &ResourceInstance,
    scenarios: &ScenarioSet,
    truth_p: &DiscreteDistribution,
) -> Result<Vec<f64>> {
    instance.check_scenarios(scenarios)?;
    if truth_p.len() != scenarios.len() {
        return Err(Error::dim("distribution", scenarios.len(), truth_p.len()));
    }
    let x = report.x();
    if x.len() != instance.num_users {
        return Err(Error::dim("allocation", instance.num_users, x.len()));
    }
    let mut out = vec![0.0; instance.num_resources];
    for (s, &q) in scenarios.iter().zip(truth_p.probs()) {
        for (i, l) in load(s, x).into_iter().enumerate() {
            out[i] += q * (instance.capacities[i] - l).max(0.0);
        }
    }
    Ok(out)
}
