//! Worst-case distribution search over the moment ambiguity set.
//!
//! The variance cap `Σ p r² − (Σ p r)² ≤ σ̄²` is reverse convex in p. It is
//! handled through the identity `Var_p(r) = min_a Σ p (r − a)²`: for any
//! anchor a, `Σ p (r − a)² ≤ σ̄²` is a linear restriction of the true set.
//! Each restart solves the anchored linear program, moves the anchor to the
//! mean of the solution and repeats. Every iterate is feasible for the true
//! set and the objective never increases, so each restart ends at a
//! stationary point. Restarts begin from the uniform distribution, the
//! point masses with the lowest objective and seeded Dirichlet draws.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{membership_slacks, worst_slack, MomentAmbiguity};
use crate::error::{Error, Result};
use crate::fairness::eval_fairness;
use crate::model::{fits, load, DiscreteDistribution, ResourceInstance, ScenarioSet};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub p: DiscreteDistribution,
    pub value: f64,
    /// Largest moment-constraint violation of `p` (0 when exactly feasible).
    pub feasibility_eps: f64,
    pub restarts_used: usize,
    pub oracle_certified: bool,
}

#[derive(Clone, Debug)]
pub struct InnerOptions {
    pub restarts: usize,
    /// Anchor updates per restart.
    pub max_anchor_steps: usize,
    /// Point-mass restarts, taken in order of increasing objective.
    pub max_vertex_starts: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            restarts: 20,
            max_anchor_steps: 60,
            max_vertex_starts: 10,
        }
    }
}

/// z_i^ω: whether resource i has room for `x` under scenario ω.
pub fn chance_indicators(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
) -> Vec<Vec<bool>> {
    let m = instance.num_resources;
    let mut z = vec![vec![false; scenarios.len()]; m];
    for (w, s) in scenarios.iter().enumerate() {
        for (i, l) in load(s, x).into_iter().enumerate() {
            z[i][w] = fits(l, instance.capacities[i]);
        }
    }
    z
}

/// Per-scenario values F(x, ξ^ω).
pub fn scenario_values(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    beta: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    scenarios
        .dominant(instance)?
        .iter()
        .map(|mu| eval_fairness(x, mu, beta, lambda).map(|v| v.value))
        .collect()
}

/// Linear programs over the anchored restriction of an ambiguity set.
pub(crate) struct AnchoredSet<'a> {
    scenarios: &'a ScenarioSet,
    set: &'a MomentAmbiguity,
    /// Rows Σ_{ω ∈ S_i} p^ω ≥ θ.
    chance: Vec<Vec<usize>>,
    theta: f64,
    /// Per-entry requirement columns, indexed [(i, j)][ω].
    cols: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

type Row = (Vec<f64>, ComparisonOp, f64);

impl<'a> AnchoredSet<'a> {
    pub fn new(
        scenarios: &'a ScenarioSet,
        set: &'a MomentAmbiguity,
        chance: Option<(&[Vec<bool>], f64)>,
    ) -> Self {
        let (m, d) = (scenarios.num_resources(), scenarios.num_users());
        let mut cols = Vec::with_capacity(m * d);
        let mut scale = Vec::with_capacity(m * d);
        for i in 0..m {
            for j in 0..d {
                let c: Vec<f64> = scenarios.iter().map(|s| s.get(i, j)).collect();
                let mx = c.iter().cloned().fold(0.0, f64::max);
                scale.push(mx.max(1e-300));
                cols.push(c);
            }
        }
        let (chance, theta) = match chance {
            Some((z, theta)) if theta > 0.0 => (
                z.iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(_, &b)| b)
                            .map(|(w, _)| w)
                            .collect()
                    })
                    .collect(),
                theta,
            ),
            _ => (Vec::new(), 0.0),
        };
        AnchoredSet {
            scenarios,
            set,
            chance,
            theta,
            cols,
            scale,
        }
    }

    fn n(&self) -> usize {
        self.scenarios.len()
    }

    fn mean_anchor(&self, p: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|c| c.iter().zip(p).map(|(r, q)| r * q).sum())
            .collect()
    }

    /// Rows of the restriction at `anchor`, each relaxed by `relax` (in
    /// the units of the corresponding constraint). Rows that no point of
    /// the simplex can violate are left out.
    fn rows(&self, anchor: &[f64], relax: f64) -> Vec<Row> {
        let n = self.n();
        let (lo, hi, cap) = (
            self.set.mean_lower.data(),
            self.set.mean_upper.data(),
            self.set.variance_upper.data(),
        );
        let mut rows: Vec<Row> = Vec::new();
        for (k, col) in self.cols.iter().enumerate() {
            let (mn, mx) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            if mn < lo[k] - relax {
                rows.push((col.clone(), ComparisonOp::Ge, lo[k] - relax));
            }
            if mx > hi[k] + relax {
                rows.push((col.clone(), ComparisonOp::Le, hi[k] + relax));
            }
            let sq: Vec<f64> = col.iter().map(|r| (r - anchor[k]).powi(2)).collect();
            if sq.iter().cloned().fold(0.0, f64::max) > cap[k] + relax {
                rows.push((sq, ComparisonOp::Le, cap[k] + relax));
            }
        }
        for sat in &self.chance {
            if sat.len() < n {
                let mut a = vec![0.0; n];
                for &w in sat {
                    a[w] = 1.0;
                }
                rows.push((a, ComparisonOp::Ge, self.theta - 1e-12));
            }
        }
        rows
    }

    /// Solves min c·p (plus a slack variable when `phase_one`).
    fn lp(
        &self,
        c: &[f64],
        anchor: &[f64],
        relax: f64,
        phase_one: bool,
    ) -> Option<(Vec<f64>, f64)> {
        let n = self.n();
        let rows = self.rows(anchor, relax);
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..n)
            .map(|w| prob.add_var(if phase_one { 0.0 } else { c[w] }, (0.0, 1.0)))
            .collect();
        let slack = phase_one.then(|| prob.add_var(1.0, (0.0, f64::INFINITY)));
        let all: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        prob.add_constraint(&all, ComparisonOp::Eq, 1.0);
        for (a, op, b) in &rows {
            let mut coefs: Vec<_> = vars
                .iter()
                .zip(a)
                .filter(|(_, &v)| v != 0.0)
                .map(|(&var, &v)| (var, v))
                .collect();
            if let Some(s) = slack {
                let sign = match op {
                    ComparisonOp::Ge => 1.0,
                    _ => -1.0,
                };
                coefs.push((s, sign));
            }
            prob.add_constraint(&coefs, *op, *b);
        }
        let sol = prob.solve().ok()?.into_solution().ok()?;
        let p: Vec<f64> = vars.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let s = slack.map(|s| sol.var_value(s)).unwrap_or(0.0);
        Some((p, s))
    }

    /// Anchored descent from `anchor`; returns (p, value, steps).
    fn descend(
        &self,
        c: &[f64],
        mut anchor: Vec<f64>,
        relax: f64,
        steps: usize,
    ) -> Option<(Vec<f64>, f64)> {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..steps {
            let (p, _) = self.lp(c, &anchor, relax, false)?;
            let sum: f64 = p.iter().sum();
            let p: Vec<f64> = p.iter().map(|v| v / sum).collect();
            let v: f64 = p.iter().zip(c).map(|(a, b)| a * b).sum();
            let next = self.mean_anchor(&p);
            let moved = next
                .iter()
                .zip(&anchor)
                .zip(&self.scale)
                .map(|((a, b), s)| (a - b).abs() / s)
                .fold(0.0, f64::max);
            let improved = match &best {
                None => true,
                Some((_, bv)) => v < *bv - 1e-13 * (1.0 + bv.abs()),
            };
            if best.as_ref().is_none_or(|(_, bv)| v <= *bv) {
                best = Some((p, v));
            }
            if !improved || moved < 1e-12 {
                break;
            }
            anchor = next;
        }
        best
    }

    /// Smallest uniform relaxation that makes the set non-empty.
    fn restoration(&self, anchors: &[Vec<f64>], steps: usize) -> Option<(f64, Vec<f64>)> {
        let zero = vec![0.0; self.n()];
        let mut best: Option<(f64, Vec<f64>)> = None;
        for a0 in anchors {
            let mut anchor = a0.clone();
            let mut prev = f64::INFINITY;
            for _ in 0..steps {
                let Some((p, s)) = self.lp(&zero, &anchor, 0.0, true) else {
                    break;
                };
                if best.as_ref().is_none_or(|(bs, _)| s < *bs) {
                    best = Some((s, anchor.clone()));
                }
                if s >= prev - 1e-15 || s <= 0.0 {
                    break;
                }
                prev = s;
                let sum: f64 = p.iter().sum();
                let p: Vec<f64> = p.iter().map(|v| v / sum).collect();
                anchor = self.mean_anchor(&p);
            }
        }
        best
    }

    fn starts(&self, c: &[f64], opts: &InnerOptions, seed: u64) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut starts = vec![self.mean_anchor(&vec![1.0 / n as f64; n])];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
        for &w in order
            .iter()
            .take(opts.max_vertex_starts.min(opts.restarts.saturating_sub(1)))
        {
            let mut e = vec![0.0; n];
            e[w] = 1.0;
            starts.push(self.mean_anchor(&e));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while starts.len() < opts.restarts.max(1) {
            let mut g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = g.iter().sum();
            g.iter_mut().for_each(|v| *v /= s);
            starts.push(self.mean_anchor(&g));
        }
        starts.truncate(opts.restarts.max(1));
        starts
    }

    /// Multi-start minimization of c·p; returns (p, value, relaxation, starts).
    pub fn minimize(
        &self,
        c: &[f64],
        eps: f64,
        seed: u64,
        opts: &InnerOptions,
    ) -> Result<(Vec<f64>, f64, f64, usize)> {
        let starts = self.starts(c, opts, seed);
        let steps = opts.max_anchor_steps;
        let runs = par::map_indexed(starts.len(), |k| {
            self.descend(c, starts[k].clone(), 0.0, steps)
        });
        let mut best: Option<(Vec<f64>, f64)> = None;
        for r in runs.into_iter().flatten() {
            if best.as_ref().is_none_or(|(_, bv)| r.1 < *bv) {
                best = Some(r);
            }
        }
        if let Some((p, v)) = best {
            return Ok((p, v, 0.0, starts.len()));
        }
        let (s, anchor) = self.restoration(&starts, steps).ok_or_else(|| {
            Error::InfeasibleInner("linear restriction infeasible at every anchor".into())
        })?;
        if s > eps / 2.0 {
            return Err(Error::InfeasibleInner(format!(
                "smallest violation found is {s:e}, above the tolerance {:e}",
                eps / 2.0
            )));
        }
        let relax = s * (1.0 + 1e-9) + 1e-15;
        let (p, v) = self
            .descend(c, anchor, relax, steps)
            .ok_or_else(|| Error::InfeasibleInner("restoration point lost".into()))?;
        Ok((p, v, relax, starts.len()))
    }
}

/// Worst-case distribution at `x`: minimizes Σ p^ω F(x, ξ^ω) over the
/// ambiguity set intersected with the chance rows Σ_ω p^ω z_i^ω ≥ θ.
#[allow(clippy::too_many_arguments)]
pub fn solve_inner(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    set: &MomentAmbiguity,
    theta: f64,
    beta: f64,
    lambda: f64,
    eps: f64,
    seed: u64,
) -> Result<InnerResult> {
    solve_inner_with(
        x,
        scenarios,
        instance,
        set,
        theta,
        beta,
        lambda,
        eps,
        seed,
        &InnerOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn solve_inner_with(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    set: &MomentAmbiguity,
    theta: f64,
    beta: f64,
    lambda: f64,
    eps: f64,
    seed: u64,
    opts: &InnerOptions,
) -> Result<InnerResult> {
    instance.check_scenarios(scenarios)?;
    if beta > 1.0 && x.iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid(
            "x",
            "must be strictly positive when beta > 1",
        ));
    }
    let f = scenario_values(x, scenarios, instance, beta, lambda)?;
    let z = chance_indicators(x, scenarios, instance);
    let lp = AnchoredSet::new(scenarios, set, Some((&z, theta)));
    let (p, _, _, used) = lp.minimize(&f, eps, seed, opts)?;
    finish(p, &f, scenarios, set, used, false)
}

fn finish(
    p: Vec<f64>,
    f: &[f64],
    scenarios: &ScenarioSet,
    set: &MomentAmbiguity,
    restarts_used: usize,
    oracle_certified: bool,
) -> Result<InnerResult> {
    let p = DiscreteDistribution::from_raw(p)?;
    let value = p.probs().iter().zip(f).map(|(a, b)| a * b).sum();
    let slack = worst_slack(&membership_slacks(&p, scenarios, set)?);
    Ok(InnerResult {
        p,
        value,
        feasibility_eps: (-slack).max(0.0),
        restarts_used,
        oracle_certified,
    })
}

/// Moment and chance feasibility test with a small absolute tolerance.
struct Feasibility<'a> {
    scenarios: &'a ScenarioSet,
    set: &'a MomentAmbiguity,
    z: &'a [Vec<bool>],
    theta: f64,
    tol: f64,
}

impl Feasibility<'_> {
    fn ok(&self, p: &[f64]) -> bool {
        let (m, d) = (self.scenarios.num_resources(), self.scenarios.num_users());
        for i in 0..m {
            for j in 0..d {
                let (mut s1, mut s2) = (0.0, 0.0);
                for (w, s) in self.scenarios.iter().enumerate() {
                    let r = s.get(i, j);
                    s1 += p[w] * r;
                    s2 += p[w] * r * r;
                }
                let var = s2 - s1 * s1;
                let k = (i, j);
                if s1 < self.set.mean_lower.get(k.0, k.1) - self.tol
                    || s1 > self.set.mean_upper.get(k.0, k.1) + self.tol
                    || var > self.set.variance_upper.get(k.0, k.1) + self.tol
                {
                    return false;
                }
            }
        }
        if self.theta > 0.0 {
            for row in self.z {
                let mass: f64 = row.iter().zip(p).filter(|(b, _)| **b).map(|(_, q)| q).sum();
                if mass < self.theta - 1e-9 {
                    return false;
                }
            }
        }
        true
    }
}

/// Exhaustive search over the lattice p = n / grid_k followed by pairwise
/// mass transfers at shrinking step sizes. Limited to |Ω| ≤ 8.
#[allow(clippy::too_many_arguments)]
pub fn inner_oracle(
    x: &[f64],
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    set: &MomentAmbiguity,
    theta: f64,
    beta: f64,
    lambda: f64,
    grid_k: usize,
) -> Result<InnerResult> {
    instance.check_scenarios(scenarios)?;
    let n = scenarios.len();
    if n > 8 || grid_k > 60 || grid_k == 0 {
        return Err(Error::OracleTooLarge(format!(
            "|Omega| = {n}, grid_k = {grid_k}; limits are 8 and 60"
        )));
    }
    let f = scenario_values(x, scenarios, instance, beta, lambda)?;
    let z = chance_indicators(x, scenarios, instance);
    let feas = Feasibility {
        scenarios,
        set,
        z: &z,
        theta,
        tol: 1e-12,
    };
    let mut counts = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let k = grid_k as f64;
    let mut p = vec![0.0; n];
    fn rec(
        pos: usize,
        left: usize,
        counts: &mut Vec<usize>,
        p: &mut Vec<f64>,
        k: f64,
        f: &[f64],
        feas: &Feasibility<'_>,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        let n = counts.len();
        if pos == n - 1 {
            counts[pos] = left;
            for w in 0..n {
                p[w] = counts[w] as f64 / k;
            }
            let v: f64 = p.iter().zip(f).map(|(a, b)| a * b).sum();
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) && feas.ok(p) {
                *best = Some((p.clone(), v));
            }
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, p, k, f, feas, best);
        }
    }
    rec(0, grid_k, &mut counts, &mut p, k, &f, &feas, &mut best);
    let (mut p, _) =
        best.ok_or_else(|| Error::InfeasibleInner("no feasible lattice point".into()))?;
    let mut h = 0.5 / k;
    while h > 1e-10 {
        let mut improved = true;
        while improved {
            improved = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b || p[a] < h || f[b] >= f[a] {
                        continue;
                    }
                    p[a] -= h;
                    p[b] += h;
                    if feas.ok(&p) {
                        improved = true;
                    } else {
                        p[a] += h;
                        p[b] -= h;
                    }
                }
            }
        }
        h *= 0.5;
    }
    finish(p, &f, scenarios, set, 0, true)
}
