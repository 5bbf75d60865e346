//! Master problem over a finite collection of distributions.
//!
//! Chance constraints are decomposed over scenario patterns. For resource i
//! a drop set D_i lists the scenarios allowed to overflow; it is admissible
//! when Σ_{ω∈D_i} p_k^ω ≤ 1 − θ for every distribution k. Once the drop
//! sets are fixed the big-M rows collapse to hard capacity rows on the
//! remaining scenarios and the problem is continuous; it is solved by the
//! barrier method in [`crate::nlp`]. Maximal drop sets are enumerated when
//! their product over resources is small, otherwise drops are chosen
//! greedily by row multiplier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::chance_indicators;
use crate::model::{load, DiscreteDistribution, ResourceInstance, ScenarioSet};
use crate::nlp::{BarrierOptions, Program, Term};
use crate::par;

/// Cap on enumerated pattern combinations.
pub const PATTERN_CAP: usize = 1 << 12;

const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterResult {
    pub x: Vec<f64>,
    pub level: f64,
    pub active_distribution: usize,
    /// z at `x`, one matrix per supplied distribution.
    pub patterns: Vec<Vec<Vec<bool>>>,
    pub restarts_used: usize,
    /// True when patterns were enumerated and the objective is concave.
    pub exact: bool,
}

/// M_i^ω = Σ_j r_ij^ω x̄_j, indexed [i][ω].
pub fn compute_bigm(instance: &ResourceInstance, scenarios: &ScenarioSet) -> Result<Vec<Vec<f64>>> {
    let ub = instance.box_upper(scenarios)?;
    let m = instance.num_resources;
    let mut out = vec![vec![0.0; scenarios.len()]; m];
    for (w, s) in scenarios.iter().enumerate() {
        for (i, l) in load(s, &ub).into_iter().enumerate() {
            out[i][w] = l;
        }
    }
    Ok(out)
}

/// z from the capacity check at `x`, and whether Σ p z ≥ θ on every resource.
pub fn select_pattern(
    x: &[f64],
    p: &DiscreteDistribution,
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    theta: f64,
) -> (Vec<Vec<bool>>, bool) {
    let z = chance_indicators(x, scenarios, instance);
    let ok = z
        .iter()
        .all(|row| satisfied_mass(row, p.probs()) >= theta - MASS_TOL);
    (z, ok)
}

pub(crate) fn satisfied_mass(row: &[bool], p: &[f64]) -> f64 {
    row.iter().zip(p).filter(|(b, _)| **b).map(|(_, q)| q).sum()
}

/// Scenario indices ordered for drop enumeration, with the always-free ones
/// (zero mass everywhere) split off.
fn split_free(n: usize, dists: &[DiscreteDistribution]) -> (Vec<usize>, Vec<usize>) {
    let (mut free, mut pos) = (Vec::new(), Vec::new());
    for w in 0..n {
        if dists.iter().all(|p| p.probs()[w] == 0.0) {
            free.push(w);
        } else {
            pos.push(w);
        }
    }
    (free, pos)
}

fn admissible(drop: &[usize], dists: &[DiscreteDistribution], theta: f64) -> bool {
    dists
        .iter()
        .all(|p| drop.iter().map(|&w| p.probs()[w]).sum::<f64>() <= 1.0 - theta + MASS_TOL)
}

/// Maximal admissible drop sets over the positive-mass scenarios, or None
/// once more than `cap` have been found or the search grows too large.
fn maximal_drops(
    pos: &[usize],
    dists: &[DiscreteDistribution],
    theta: f64,
    cap: usize,
) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut nodes = 0usize;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        pos: &[usize],
        cur: &mut Vec<usize>,
        dists: &[DiscreteDistribution],
        theta: f64,
        cap: usize,
        out: &mut Vec<Vec<usize>>,
        nodes: &mut usize,
    ) -> bool {
        *nodes += 1;
        if *nodes > 64 * cap {
            return false;
        }
        if k == pos.len() {
            let maximal = pos.iter().all(|w| {
                if cur.contains(w) {
                    return true;
                }
                cur.push(*w);
                let ok = admissible(cur, dists, theta);
                cur.pop();
                !ok
            });
            if maximal {
                out.push(cur.clone());
                if out.len() > cap {
                    return false;
                }
            }
            return true;
        }
        cur.push(pos[k]);
        if admissible(cur, dists, theta) && !rec(k + 1, pos, cur, dists, theta, cap, out, nodes) {
            return false;
        }
        cur.pop();
        rec(k + 1, pos, cur, dists, theta, cap, out, nodes)
    }
    rec(0, pos, &mut cur, dists, theta, cap, &mut out, &mut nodes).then_some(out)
}

/// Greedy drop set: scenarios in decreasing big-M order until the mass
/// budget is spent.
fn greedy_drop(
    i: usize,
    bigm: &[Vec<f64>],
    pos: &[usize],
    dists: &[DiscreteDistribution],
    theta: f64,
) -> Vec<usize> {
    let mut order = pos.to_vec();
    order.sort_by(|&a, &b| bigm[i][b].total_cmp(&bigm[i][a]).then(a.cmp(&b)));
    let mut d = Vec::new();
    for w in order {
        d.push(w);
        if !admissible(&d, dists, theta) {
            d.pop();
        }
    }
    d
}

fn to_pattern(n: usize, drop: &[usize], free: &[usize]) -> Vec<bool> {
    let mut z = vec![true; n];
    for &w in drop.iter().chain(free) {
        z[w] = false;
    }
    z
}

/// Candidate z patterns per resource: all ones, the greedy pattern and,
/// under the enumeration cap, every minimal pattern with Σ p z ≥ θ.
pub fn pattern_search(
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    dists: &[DiscreteDistribution],
    theta: f64,
) -> Result<Vec<Vec<Vec<bool>>>> {
    let n = scenarios.len();
    for p in dists {
        if p.len() != n {
            return Err(Error::dim("distribution", n, p.len()));
        }
    }
    let bigm = compute_bigm(instance, scenarios)?;
    let (free, pos) = split_free(n, dists);
    let enumerated = maximal_drops(&pos, dists, theta, PATTERN_CAP);
    let mut out = Vec::with_capacity(instance.num_resources);
    for i in 0..instance.num_resources {
        let mut pats = vec![vec![true; n]];
        pats.push(to_pattern(
            n,
            &greedy_drop(i, &bigm, &pos, dists, theta),
            &free,
        ));
        if let Some(all) = &enumerated {
            for d in all {
                pats.push(to_pattern(n, d, &free));
            }
        }
        let mut uniq: Vec<Vec<bool>> = Vec::new();
        for p in pats {
            if !uniq.contains(&p) {
                uniq.push(p);
            }
        }
        out.push(uniq);
    }
    Ok(out)
}

/// A fixed-objective program with chance constraints under `chance_dists`.
pub(crate) struct ProgramSpec<'a> {
    pub instance: &'a ResourceInstance,
    /// Scenarios carrying the capacity rows.
    pub scenarios: &'a ScenarioSet,
    pub upper: Vec<f64>,
    /// Dominant-requirement vectors referenced by `terms`.
    pub mus: Vec<Vec<f64>>,
    pub terms: Vec<Term>,
    pub chance_dists: Vec<DiscreteDistribution>,
    pub theta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub concave: bool,
    pub seed: u64,
}

pub(crate) struct ProgramResult {
    pub x: Vec<f64>,
    pub level: f64,
    pub solves: usize,
    pub exact: bool,
}

/// Rows of one resource that are not implied by another kept row.
fn prune_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if rows.len() < 8 {
        return rows;
    }
    let mut keep = vec![true; rows.len()];
    for a in 0..rows.len() {
        for b in 0..rows.len() {
            if a == b || !keep[b] {
                continue;
            }
            let dominated = rows[a].iter().zip(&rows[b]).all(|(x, y)| x <= y);
            if dominated && (rows[a] != rows[b] || a > b) {
                keep[a] = false;
                break;
            }
        }
    }
    rows.into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r)
        .collect()
}

/// Barrier solve for fixed drop sets, warm-started when possible.
fn solve_fixed(
    spec: &ProgramSpec<'_>,
    drops: &[Vec<bool>],
    warm: Option<&[f64]>,
    starts: &[Vec<f64>],
) -> Option<(crate::nlp::BarrierResult, Vec<(usize, usize)>)> {
    let mut rows = Vec::new();
    let mut tags = Vec::new();
    for i in 0..spec.instance.num_resources {
        let mut res_rows = Vec::new();
        for (w, s) in spec.scenarios.iter().enumerate() {
            if drops[i][w] {
                continue;
            }
            let a = s.row(i).to_vec();
            if a.iter().any(|&v| v > 0.0) {
                res_rows.push((a, w));
            }
        }
        let kept = prune_rows(res_rows.iter().map(|(a, _)| a.clone()).collect());
        for a in kept {
            let w = res_rows
                .iter()
                .find(|(r, _)| *r == a)
                .map(|(_, w)| *w)
                .unwrap_or(0);
            rows.push((a, spec.instance.capacities[i]));
            tags.push((i, w));
        }
    }
    let prog = Program {
        mus: &spec.mus,
        terms: &spec.terms,
        beta: spec.beta,
        lambda: spec.lambda,
        rows,
        upper: &spec.upper,
    };
    let opts = BarrierOptions::default();
    let mut best: Option<crate::nlp::BarrierResult> = None;
    let mut consider = |r: Option<crate::nlp::BarrierResult>| {
        if let Some(r) = r {
            let better = match &best {
                None => true,
                Some(b) => {
                    r.level > b.level + 1e-12 * (1.0 + b.level.abs())
                        || ((r.level - b.level).abs() <= 1e-12 * (1.0 + b.level.abs()) && r.x < b.x)
                }
            };
            if better {
                best = Some(r);
            }
        }
    };
    if let Some(w) = warm {
        let x0 = if prog.is_interior(w) {
            w.to_vec()
        } else {
            prog.interior_point(w)
        };
        if prog.term_values(&x0).is_some() {
            consider(prog.solve(&x0, &opts));
        }
    }
    for s in starts {
        consider(prog.solve(&prog.interior_point(s), &opts));
    }
    best.map(|b| (b, tags))
}

fn start_points(spec: &ProgramSpec<'_>) -> Vec<Vec<f64>> {
    let d = spec.upper.len();
    let mut starts = vec![spec.upper.iter().map(|u| 0.5 * u).collect::<Vec<_>>()];
    if spec.concave {
        return starts;
    }
    starts.push(spec.upper.iter().map(|u| u / d as f64).collect());
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..3 {
        starts.push(
            spec.upper
                .iter()
                .map(|u| u * (0.05 + 0.9 * rng.gen::<f64>()))
                .collect(),
        );
    }
    starts
}

pub(crate) fn solve_program(spec: &ProgramSpec<'_>) -> Result<ProgramResult> {
    let n = spec.scenarios.len();
    let m = spec.instance.num_resources;
    let (free, pos) = split_free(n, &spec.chance_dists);
    let starts = start_points(spec);
    let base: Vec<bool> = to_pattern(n, &[], &free).iter().map(|b| !b).collect();
    let enumerated = maximal_drops(&pos, &spec.chance_dists, spec.theta, PATTERN_CAP);
    let combos = enumerated.as_ref().map(|e| e.len().max(1).pow(m as u32));
    let infeasible = || Error::Numerical("barrier method failed from every start".into());
    if let (Some(sets), Some(total)) = (&enumerated, combos) {
        if total <= PATTERN_CAP {
            let k = sets.len().max(1);
            let results = par::map_indexed(total, |c| {
                let mut drops = vec![base.clone(); m];
                let mut code = c;
                for row in drops.iter_mut() {
                    if let Some(set) = sets.get(code % k) {
                        for &w in set {
                            row[w] = true;
                        }
                    }
                    code /= k;
                }
                solve_fixed(spec, &drops, None, &starts).map(|(r, _)| r)
            });
            let mut best: Option<crate::nlp::BarrierResult> = None;
            let solves = results.len();
            for r in results.into_iter().flatten() {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        r.level > b.level + 1e-10 * (1.0 + b.level.abs())
                            || ((r.level - b.level).abs() <= 1e-10 * (1.0 + b.level.abs())
                                && r.x < b.x)
                    }
                };
                if better {
                    best = Some(r);
                }
            }
            let b = best.ok_or_else(infeasible)?;
            return Ok(ProgramResult {
                x: b.x,
                level: b.level,
                solves,
                exact: spec.concave,
            });
        }
    }
    // Greedy: drop the row with the largest multiplier while the budget
    // allows, releasing drops that the current point already satisfies.
    let mut drops = vec![base.clone(); m];
    let (mut cur, _) = solve_fixed(spec, &drops, None, &starts).ok_or_else(infeasible)?;
    let mut solves = 1;
    let mut best = cur.clone();
    let max_drops: usize = {
        let mut count = 0;
        let mut d = Vec::new();
        let mut order = pos.clone();
        order.sort_by(|&a, &b| {
            let ma = spec
                .chance_dists
                .iter()
                .map(|p| p.probs()[a])
                .fold(0.0, f64::max);
            let mb = spec
                .chance_dists
                .iter()
                .map(|p| p.probs()[b])
                .fold(0.0, f64::max);
            ma.total_cmp(&mb)
        });
        for w in order {
            d.push(w);
            if !admissible(&d, &spec.chance_dists, spec.theta) {
                break;
            }
            count += 1;
        }
        count
    };
    let budget_steps = 3 * m * max_drops + m;
    for _ in 0..budget_steps {
        let loads: Vec<Vec<f64>> = spec.scenarios.loads(&cur.x);
        let prog_rows = rows_with_duals(spec, &drops, &cur);
        let mut cand: Option<(f64, usize, usize)> = None;
        for (i, w, dual) in prog_rows {
            if dual <= 1e-9 * (1.0 + cur.level.abs()) {
                continue;
            }
            let mut trial: Vec<usize> = (0..n)
                .filter(|&v| drops[i][v] && pos.contains(&v))
                .collect();
            trial.retain(|&v| loads[v][i] > spec.instance.capacities[i] * (1.0 - 1e-7));
            trial.push(w);
            if admissible(&trial, &spec.chance_dists, spec.theta)
                && cand.is_none_or(|(d, _, _)| dual > d)
            {
                cand = Some((dual, i, w));
            }
        }
        let Some((_, i, w)) = cand else { break };
        for v in 0..n {
            if drops[i][v]
                && pos.contains(&v)
                && loads[v][i] <= spec.instance.capacities[i] * (1.0 - 1e-7)
            {
                drops[i][v] = false;
            }
        }
        drops[i][w] = true;
        let Some((next, _)) = solve_fixed(spec, &drops, Some(&cur.x), &[]) else {
            break;
        };
        solves += 1;
        if next.level <= cur.level + 1e-12 * (1.0 + cur.level.abs()) {
            break;
        }
        cur = next;
        if cur.level > best.level {
            best = cur.clone();
        }
    }
    Ok(ProgramResult {
        x: best.x,
        level: best.level,
        solves,
        exact: false,
    })
}

fn rows_with_duals(
    spec: &ProgramSpec<'_>,
    drops: &[Vec<bool>],
    r: &crate::nlp::BarrierResult,
) -> Vec<(usize, usize, f64)> {
    // Multipliers are attached to the pruned rows; re-run the pruning to
    // recover the (resource, scenario) tags in the same order.
    let mut out = Vec::new();
    let mut k = 0;
    for i in 0..spec.instance.num_resources {
        let mut res_rows = Vec::new();
        for (w, s) in spec.scenarios.iter().enumerate() {
            if drops[i][w] {
                continue;
            }
            let a = s.row(i).to_vec();
            if a.iter().any(|&v| v > 0.0) {
                res_rows.push((a, w));
            }
        }
        let kept = prune_rows(res_rows.iter().map(|(a, _)| a.clone()).collect());
        for a in kept {
            let w = res_rows
                .iter()
                .find(|(r, _)| *r == a)
                .map(|(_, w)| *w)
                .unwrap_or(0);
            if let Some(&dual) = r.row_duals.get(k) {
                out.push((i, w, dual));
            }
            k += 1;
        }
    }
    out
}

/// Expected fairness under each term's weights, summed in scenario order.
pub(crate) fn term_levels(
    x: &[f64],
    mus: &[Vec<f64>],
    terms: &[Term],
    beta: f64,
    lambda: f64,
) -> Vec<f64> {
    terms
        .iter()
        .map(|t| {
            let mut v = 0.0;
            for &(w, wt) in &t.weights {
                v += wt * crate::fairness::value_fast(x, &mus[w], beta, lambda);
            }
            v
        })
        .collect()
}

pub(crate) fn dist_term(p: &DiscreteDistribution) -> Term {
    Term {
        weights: p
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(w, &v)| (w, v))
            .collect(),
    }
}

/// Maximizes min_k E_{p_k} F(x) subject to chance constraints under every
/// p_k.
#[allow(clippy::too_many_arguments)]
pub fn solve_master(
    scenarios: &ScenarioSet,
    instance: &ResourceInstance,
    dists: &[DiscreteDistribution],
    theta: f64,
    beta: f64,
    lambda: f64,
    eps: f64,
    seed: u64,
) -> Result<MasterResult> {
    if dists.is_empty() {
        return Err(Error::invalid("dists", "need at least one distribution"));
    }
    if beta == 0.0 {
        return Err(Error::invalid("beta", "the master needs beta != 0"));
    }
    let _ = eps;
    let n = scenarios.len();
    for p in dists {
        if p.len() != n {
            return Err(Error::dim("distribution", n, p.len()));
        }
    }
    let upper = instance.box_upper(scenarios)?;
    let mus = scenarios.dominant(instance)?;
    let terms: Vec<Term> = dists.iter().map(dist_term).collect();
    let concave = beta > 1.0 && (lambda - (1.0 - beta) / beta).abs() < 1e-12;
    let spec = ProgramSpec {
        instance,
        scenarios,
        upper,
        mus,
        terms,
        chance_dists: dists.to_vec(),
        theta,
        beta,
        lambda,
        concave,
        seed,
    };
    let r = solve_program(&spec)?;
    let levels = term_levels(&r.x, &spec.mus, &spec.terms, beta, lambda);
    let (active, level) = levels.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) },
    );
    let z = chance_indicators(&r.x, scenarios, instance);
    Ok(MasterResult {
        x: r.x,
        level,
        active_distribution: active,
        patterns: vec![z; dists.len()],
        restarts_used: r.solves,
        exact: r.exact,
    })
}
