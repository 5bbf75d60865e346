//! The fairness-efficiency function on dominant shares.
//!
//! With y_j = μ_j x_j, S = Σ y_j and t_j = y_j / S the function is
//! `sign(1−β) · (Σ t_j^{1−β})^{1/β} · S^λ`. Power sums are evaluated in log
//! space with a max shift so that large |β| does not overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_shares, DiscreteDistribution, Matrix, ResourceInstance, ScenarioSet};

/// Largest |β| accepted by the generic evaluator.
pub const MAX_ABS_BETA: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Generic,
    BetaOne,
    BetaZeroEntropy,
    JainMinusOne,
    MaxRatioInf,
    MinRatioNegInf,
    CoupledCancel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessValue {
    pub value: f64,
    pub regime: Regime,
}

fn check_inputs(x: &[f64], mu: &[f64]) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(Error::dim(
            "allocation vs dominant shares",
            mu.len(),
            x.len(),
        ));
    }
    if x.is_empty() {
        return Err(Error::invalid("allocation", "no users"));
    }
    for (j, (&xj, &mj)) in x.iter().zip(mu).enumerate() {
        if !(mj > 0.0 && mj.is_finite()) {
            return Err(Error::invalid(
                format!("mu[{j}]"),
                "dominant requirement must be positive",
            ));
        }
        if !(xj >= 0.0 && xj.is_finite()) {
            return Err(Error::invalid(
                format!("x[{j}]"),
                "allocation must be finite and non-negative",
            ));
        }
    }
    let s: f64 = x.iter().zip(mu).map(|(a, b)| a * b).sum();
    if !(s > 0.0) {
        return Err(Error::invalid(
            "allocation",
            "all-zero allocation leaves S = 0",
        ));
    }
    Ok(s)
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta.abs() > MAX_ABS_BETA {
        return Err(Error::invalid(
            "beta",
            format!("|beta| > {MAX_ABS_BETA}; use the limiting closed forms instead"),
        ));
    }
    Ok(())
}

/// Log-space core shared by the public evaluators. Inputs must already be
/// validated; `s` is the total dominant share.
#[inline]
fn generic_value(x: &[f64], mu: &[f64], s: f64, beta: f64, lambda: f64) -> f64 {
    let q = 1.0 - beta;
    if q == 0.0 {
        return s.powf(lambda);
    }
    let ls = s.ln();
    let mut mx = f64::NEG_INFINITY;
    let mut buf = [0.0f64; 32];
    let mut heap;
    let terms: &mut [f64] = if x.len() <= 32 {
        &mut buf[..x.len()]
    } else {
        heap = vec![0.0; x.len()];
        &mut heap
    };
    for j in 0..x.len() {
        let y = mu[j] * x[j];
        let a = if y > 0.0 {
            q * (y.ln() - ls)
        } else if q < 0.0 {
            return f64::NEG_INFINITY;
        } else {
            f64::NEG_INFINITY
        };
        terms[j] = a;
        mx = mx.max(a);
    }
    let sum: f64 = terms.iter().map(|&a| (a - mx).exp()).sum();
    let lse = mx + sum.ln();
    let sign = if q > 0.0 { 1.0 } else { -1.0 };
    sign * (lse / beta + lambda * ls).exp()
}

/// Unchecked evaluation for solver inner loops.
#[inline]
pub(crate) fn value_fast(x: &[f64], mu: &[f64], beta: f64, lambda: f64) -> f64 {
    let s: f64 = x.iter().zip(mu).map(|(a, b)| a * b).sum();
    if beta == 0.0 {
        return entropy_value(x, mu, s, lambda);
    }
    generic_value(x, mu, s, beta, lambda)
}

fn entropy_value(x: &[f64], mu: &[f64], s: f64, lambda: f64) -> f64 {
    let h: f64 = x
        .iter()
        .zip(mu)
        .map(|(a, b)| {
            let t = a * b / s;
            if t > 0.0 {
                -t * t.ln()
            } else {
                0.0
            }
        })
        .sum();
    (h + lambda * s.ln()).exp()
}

/// Evaluates F(x, ξ) for the scenario with dominant requirements `mu`.
pub fn eval_fairness(x: &[f64], mu: &[f64], beta: f64, lambda: f64) -> Result<FairnessValue> {
    check_beta(beta)?;
    let s = check_inputs(x, mu)?;
    if beta == 1.0 {
        return Ok(FairnessValue {
            value: s.powf(lambda),
            regime: Regime::BetaOne,
        });
    }
    if beta == 0.0 {
        return Ok(FairnessValue {
            value: entropy_value(x, mu, s, lambda),
            regime: Regime::BetaZeroEntropy,
        });
    }
    let regime = if beta == -1.0 {
        Regime::JainMinusOne
    } else if (lambda - (1.0 - beta) / beta).abs() <= 1e-15 * lambda.abs().max(1.0) {
        Regime::CoupledCancel
    } else {
        Regime::Generic
    };
    Ok(FairnessValue {
        value: generic_value(x, mu, s, beta, lambda),
        regime,
    })
}

/// Closed forms for the named limits and special cases.
pub fn eval_special(x: &[f64], mu: &[f64], regime: Regime, lambda: f64) -> Result<f64> {
    let s = check_inputs(x, mu)?;
    let y: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a * b).collect();
    let need_positive = || -> Result<()> {
        if y.iter().any(|&v| v <= 0.0) {
            return Err(Error::invalid(
                "allocation",
                "this closed form needs every dominant share positive",
            ));
        }
        Ok(())
    };
    match regime {
        Regime::BetaOne => Ok(s.powf(lambda)),
        Regime::BetaZeroEntropy => Ok(entropy_value(x, mu, s, lambda)),
        Regime::JainMinusOne => {
            need_positive()?;
            let sq: f64 = y.iter().map(|v| v * v).sum();
            Ok(s.powf(lambda + 2.0) / sq)
        }
        Regime::MaxRatioInf => {
            need_positive()?;
            let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(-s.powf(lambda + 1.0) / ymin)
        }
        Regime::MinRatioNegInf => {
            need_positive()?;
            let ymax = y.iter().cloned().fold(0.0, f64::max);
            Ok(s.powf(lambda + 1.0) / ymax)
        }
        Regime::Generic | Regime::CoupledCancel => Err(Error::invalid(
            "regime",
            "no closed form for the generic regimes; use eval_fairness",
        )),
    }
}

/// The λ = (1−β)/β form `sign(1−β) · (Σ y_j^{1−β})^{1/β}`.
pub fn eval_coupled(x: &[f64], mu: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_inputs(x, mu)?;
    if beta == 1.0 || beta == 0.0 {
        return Err(Error::invalid(
            "beta",
            "coupled form needs beta outside {0, 1}",
        ));
    }
    let q = 1.0 - beta;
    let mut logs = Vec::with_capacity(x.len());
    for (a, b) in x.iter().zip(mu) {
        let y = a * b;
        if y > 0.0 {
            logs.push(q * y.ln());
        } else if q < 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + logs.iter().map(|a| (a - mx).exp()).sum::<f64>().ln();
    let sign = if q > 0.0 { 1.0 } else { -1.0 };
    Ok(sign * (lse / beta).exp())
}

/// Σ_ω p^ω F(x, ξ^ω).
pub fn expected_fairness(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    p: &DiscreteDistribution,
    beta: f64,
    lambda: f64,
) -> Result<f64> {
    if p.len() != scenarios.len() {
        return Err(Error::dim("distribution", scenarios.len(), p.len()));
    }
    let mus = scenarios.dominant(instance)?;
    let mut total = 0.0;
    for (w, mu) in mus.iter().enumerate() {
        let pw = p.probs()[w];
        if pw == 0.0 {
            continue;
        }
        let v = eval_fairness(x, mu, beta, lambda)?.value;
        if v == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += pw * v;
    }
    Ok(total)
}

/// F evaluated against a fixed requirement matrix.
pub fn eval_fds_deterministic(
    x: &[f64],
    requirements: &Matrix,
    instance: &ResourceInstance,
    beta: f64,
    lambda: f64,
) -> Result<f64> {
    let (_, mu) = derive_shares(instance, requirements)?;
    Ok(eval_fairness(x, &mu, beta, lambda)?.value)
}

/// Adds `weight · ∇F` into `grad` and `weight · ∇²F` (row-major d×d) into
/// `hess`, returning F. Requires every x_j > 0 and β ≠ 0.
///
/// Writing F = sign · exp(A), with w the softmax weights of (1−β) log t,
/// ∂A/∂x_k = (q/β)(w_k/x_k − μ_k/S) + λ μ_k/S and
/// ∂²A/∂x_k∂x_l = (q/β)[q w_k(δ_kl − w_l)/(x_k x_l) − δ_kl w_k/x_k²]
///               + (q/β − λ) μ_k μ_l / S².
pub(crate) fn accumulate_derivatives(
    x: &[f64],
    mu: &[f64],
    beta: f64,
    lambda: f64,
    weight: f64,
    grad: &mut [f64],
    hess: Option<&mut [f64]>,
    scratch: &mut Vec<f64>,
) -> f64 {
    let d = x.len();
    let q = 1.0 - beta;
    let s: f64 = x.iter().zip(mu).map(|(a, b)| a * b).sum();
    let f = generic_value(x, mu, s, beta, lambda);
    scratch.clear();
    scratch.resize(2 * d, 0.0);
    let (w, da) = scratch.split_at_mut(d);
    if q == 0.0 {
        w.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let ls = s.ln();
        let mut mx = f64::NEG_INFINITY;
        for j in 0..d {
            w[j] = q * ((mu[j] * x[j]).ln() - ls);
            mx = mx.max(w[j]);
        }
        let mut tot = 0.0;
        for v in w.iter_mut() {
            *v = (*v - mx).exp();
            tot += *v;
        }
        w.iter_mut().for_each(|v| *v /= tot);
    }
    let qb = if q == 0.0 { 0.0 } else { q / beta };
    for k in 0..d {
        da[k] = qb * (w[k] / x[k] - mu[k] / s) + lambda * mu[k] / s;
        grad[k] += weight * f * da[k];
    }
    if let Some(h) = hess {
        let c = (qb - lambda) / (s * s);
        for k in 0..d {
            for l in 0..d {
                let mut d2 = c * mu[k] * mu[l];
                if qb != 0.0 {
                    let delta = if k == l { 1.0 } else { 0.0 };
                    d2 += qb
                        * (q * w[k] * (delta - w[l]) / (x[k] * x[l])
                            - delta * w[k] / (x[k] * x[k]));
                }
                h[k * d + l] += weight * f * (da[k] * da[l] + d2);
            }
        }
    }
    f
}
