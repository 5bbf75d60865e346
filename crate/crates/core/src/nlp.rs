//! Log-barrier interior-point solver for the fixed-pattern subproblems
//!
//! ```text
//! max  t   s.t.  t ≤ f_k(x) = Σ_ω w_kω F(x, μ^ω)   for every term k
//!                a_l · x ≤ b_l                       for every row l
//!                0 < x < ub
//! ```
//!
//! Each centering step is a damped Newton iteration on the barrier
//! function; derivatives of F come from [`crate::fairness`]. When the
//! objective is concave (β > 1 with coupled λ) the reported gap bounds the
//! distance to the optimum; otherwise the result is a local optimum and a
//! ridge keeps the Newton system positive definite.

use crate::fairness::{accumulate_derivatives, value_fast};

/// One objective term: a weighted combination of scenario evaluations.
#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub weights: Vec<(usize, f64)>,
}

pub(crate) struct Program<'a> {
    pub mus: &'a [Vec<f64>],
    pub terms: &'a [Term],
    pub beta: f64,
    pub lambda: f64,
    /// Linear rows `a·x ≤ b`.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub upper: &'a [f64],
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierResult {
    pub x: Vec<f64>,
    /// min over terms of f_k(x).
    pub level: f64,
    /// Multiplier estimates for the linear rows.
    pub row_duals: Vec<f64>,
}

pub(crate) struct BarrierOptions {
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            gap_tol: 1e-10,
            max_newton: 2000,
        }
    }
}

/// Cholesky solve of `h · v = rhs` with a growing ridge when `h` is not
/// positive definite. `h` is overwritten.
fn ridge_solve(h: &[f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let scale = (0..n)
        .map(|i| h[i * n + i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut ridge = 0.0;
    let mut l = vec![0.0; n * n];
    for _ in 0..40 {
        if chol(h, n, ridge, &mut l) {
            let mut y = rhs.to_vec();
            for i in 0..n {
                let mut s = y[i];
                for k in 0..i {
                    s -= l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            if y.iter().all(|v| v.is_finite()) {
                return Some(y);
            }
        }
        ridge = if ridge == 0.0 {
            1e-12 * scale
        } else {
            ridge * 10.0
        };
    }
    None
}

fn chol(h: &[f64], n: usize, ridge: f64, l: &mut [f64]) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            if i == j {
                s += ridge;
            }
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// The t minimizing −τ t − Σ_k ln(f_k − t): the root of Σ 1/(f_k − t) = τ,
/// bracketed in [min f − K/τ, min f − 1/τ].
fn best_t(fs: &[f64], tau: f64) -> f64 {
    let fmin = fs.iter().cloned().fold(f64::INFINITY, f64::min);
    if fs.len() == 1 {
        return fmin - 1.0 / tau;
    }
    let (mut lo, mut hi) = (fmin - fs.len() as f64 / tau, fmin - 1.0 / tau);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sum: f64 = fs.iter().map(|f| 1.0 / (f - mid)).sum();
        if sum > tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

impl<'a> Program<'a> {
    fn d(&self) -> usize {
        self.upper.len()
    }

    fn n_barrier(&self) -> usize {
        self.terms.len() + self.rows.len() + 2 * self.d()
    }

    /// Term values at x, or None outside the domain.
    pub fn term_values(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut fw = vec![f64::NAN; self.mus.len()];
        let mut out = Vec::with_capacity(self.terms.len());
        for term in self.terms {
            let mut v = 0.0;
            for &(w, wt) in &term.weights {
                if fw[w].is_nan() {
                    fw[w] = value_fast(x, &self.mus[w], self.beta, self.lambda);
                }
                v += wt * fw[w];
            }
            if !v.is_finite() {
                return None;
            }
            out.push(v);
        }
        Some(out)
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.iter().zip(self.upper).all(|(&v, &u)| v > 0.0 && v < u)
            && self
                .rows
                .iter()
                .all(|(a, b)| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() < *b)
    }

    /// Barrier value at (x, t) scaled by τ; +∞ outside the domain.
    fn phi(&self, x: &[f64], t: f64, tau: f64) -> f64 {
        if !self.is_interior(x) {
            return f64::INFINITY;
        }
        let mut v = -tau * t;
        match self.term_values(x) {
            None => return f64::INFINITY,
            Some(fs) => {
                for f in fs {
                    let g = f - t;
                    if !(g > 0.0) {
                        return f64::INFINITY;
                    }
                    v -= g.ln();
                }
            }
        }
        for (a, b) in &self.rows {
            let s = b - a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            v -= s.ln();
        }
        for (&xj, &u) in x.iter().zip(self.upper) {
            v -= xj.ln() + (u - xj).ln();
        }
        v
    }

    /// Pushes `dir` into the interior, scaled so that every row keeps at
    /// least half its slack.
    pub fn interior_point(&self, dir: &[f64]) -> Vec<f64> {
        let mut kappa: f64 = 1.0;
        for (a, b) in &self.rows {
            let l: f64 = a.iter().zip(dir).map(|(p, q)| p * q).sum();
            if l > 0.0 {
                kappa = kappa.min(0.5 * b / l);
            }
        }
        dir.iter()
            .zip(self.upper)
            .map(|(&v, &u)| (kappa * v).clamp(1e-12 * u, 0.999 * u))
            .collect()
    }

    /// Runs the barrier method from the strictly feasible `x0`.
    pub fn solve(&self, x0: &[f64], opts: &BarrierOptions) -> Option<BarrierResult> {
        let d = self.d();
        let n = d + 1;
        if !self.is_interior(x0) {
            return None;
        }
        let mut x = x0.to_vec();
        let f0 = self.term_values(&x)?;
        let fmin = f0.iter().cloned().fold(f64::INFINITY, f64::min);
        let nb = self.n_barrier() as f64;
        let mut tau = nb / (fmin.abs().max(1e-3));
        let mut t = best_t(&f0, tau);
        let mut steps = 0;
        let k = self.mus.len();
        let mut fv = vec![0.0; k];
        let mut gv = vec![0.0; k * d];
        let mut hv = vec![0.0; k * d * d];
        let mut used = vec![false; k];
        for term in self.terms {
            for &(w, _) in &term.weights {
                used[w] = true;
            }
        }
        let mut scratch = Vec::new();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        loop {
            // Centering.
            for _ in 0..200 {
                if steps >= opts.max_newton {
                    break;
                }
                steps += 1;
                for w in 0..k {
                    if !used[w] {
                        continue;
                    }
                    let g = &mut gv[w * d..(w + 1) * d];
                    g.iter_mut().for_each(|v| *v = 0.0);
                    let h = &mut hv[w * d * d..(w + 1) * d * d];
                    h.iter_mut().for_each(|v| *v = 0.0);
                    fv[w] = accumulate_derivatives(
                        &x,
                        &self.mus[w],
                        self.beta,
                        self.lambda,
                        1.0,
                        g,
                        Some(h),
                        &mut scratch,
                    );
                }
                grad.iter_mut().for_each(|v| *v = 0.0);
                hess.iter_mut().for_each(|v| *v = 0.0);
                grad[d] = -tau;
                let mut coef = vec![0.0; k];
                for term in self.terms {
                    let mut f = 0.0;
                    let mut gf = vec![0.0; d];
                    for &(w, wt) in &term.weights {
                        f += wt * fv[w];
                        for j in 0..d {
                            gf[j] += wt * gv[w * d + j];
                        }
                    }
                    let gap = f - t;
                    // -ln(f - t): gradient -(∇f, -1)/gap.
                    for j in 0..d {
                        grad[j] -= gf[j] / gap;
                    }
                    grad[d] += 1.0 / gap;
                    let g2 = gap * gap;
                    for a in 0..n {
                        let va = if a < d { gf[a] } else { -1.0 };
                        for b in 0..n {
                            let vb = if b < d { gf[b] } else { -1.0 };
                            hess[a * n + b] += va * vb / g2;
                        }
                    }
                    for &(w, wt) in &term.weights {
                        coef[w] += wt / gap;
                    }
                }
                for w in 0..k {
                    if coef[w] == 0.0 {
                        continue;
                    }
                    for a in 0..d {
                        for b in 0..d {
                            hess[a * n + b] -= coef[w] * hv[w * d * d + a * d + b];
                        }
                    }
                }
                for (a, b) in &self.rows {
                    let s = b - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
                    for p in 0..d {
                        if a[p] == 0.0 {
                            continue;
                        }
                        grad[p] += a[p] / s;
                        for q in 0..d {
                            hess[p * n + q] += a[p] * a[q] / (s * s);
                        }
                    }
                }
                for j in 0..d {
                    let (lo, hi) = (x[j], self.upper[j] - x[j]);
                    grad[j] += -1.0 / lo + 1.0 / hi;
                    hess[j * n + j] += 1.0 / (lo * lo) + 1.0 / (hi * hi);
                }
                let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
                let dz = ridge_solve(&hess, n, &rhs)?;
                let dec: f64 = -grad.iter().zip(&dz).map(|(g, v)| g * v).sum::<f64>();
                if dec <= 0.0 || dec * 0.5 <= 1e-11 {
                    break;
                }
                // Line search on the barrier with t eliminated; the x part of
                // the joint Newton step is the Newton step of that function.
                let p0 = self.phi(&x, t, tau);
                let mut s = 1.0;
                let mut moved = false;
                while s > 1e-14 {
                    let xn: Vec<f64> = x.iter().zip(&dz).map(|(a, b)| a + s * b).collect();
                    if let Some(fs) = self
                        .is_interior(&xn)
                        .then(|| self.term_values(&xn))
                        .flatten()
                    {
                        let tn = best_t(&fs, tau);
                        if self.phi(&xn, tn, tau) <= p0 - 0.25 * s * dec {
                            x = xn;
                            t = tn;
                            moved = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            let gap = nb / tau;
            let fs = self.term_values(&x)?;
            let level = fs.iter().cloned().fold(f64::INFINITY, f64::min);
            if gap <= opts.gap_tol * (1.0 + level.abs()) || steps >= opts.max_newton {
                let row_duals = self
                    .rows
                    .iter()
                    .map(|(a, b)| {
                        let s = b - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
                        1.0 / (tau * s)
                    })
                    .collect();
                return Some(BarrierResult {
                    x,
                    level,
                    row_duals,
                });
            }
            tau *= 10.0;
            t = best_t(&fs, tau);
        }
    }
}
