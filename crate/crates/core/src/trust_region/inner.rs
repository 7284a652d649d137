//! Inner minimisation of the Lagrangian
//!
//! ```text
//! Λ(δ; λ, μ) = ‖d − δ‖_p^p + λ (b·δ − c) + μ (‖δ‖₂² − r),   lo ≤ δ ≤ hi
//! ```
//!
//! over the box for fixed multipliers. For L0/L1/L2 it separates into
//! one-dimensional problems per component. For L∞ the distance term is
//! replaced by a slack `ε` whose constraint is merged into the box; the best
//! `ε` is found by a sweep over the breakpoints of the (convex, piecewise
//! quadratic) value as a function of `ε`.
//!
//! The reported `lagrangian_value` excludes the constant `−λc − μr`.

use crate::base::{NormKind, TrustRegionProblem, L0_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub delta: Vec<f64>,
    pub lagrangian_value: f64,
}

/// Problem data in the form the inner solvers consume.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub d: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub r: f64,
    pub norm: NormKind,
}

impl Prepared {
    pub fn new(problem: &TrustRegionProblem) -> Self {
        let (lo, hi) = problem.step_bounds();
        Self {
            d: problem.residual(),
            lo,
            hi,
            b: problem.b.clone(),
            c: problem.c,
            r: problem.r,
            norm: problem.norm,
        }
    }

    /// Inner infimum for the problem's norm; L∞ searches the slack.
    pub fn inner(&self, lambda: f64, mu: f64) -> (InnerResult, Option<f64>) {
        match self.norm {
            NormKind::L0 => (self.l0(lambda, mu), None),
            NormKind::L1 => (self.l1(lambda, mu), None),
            NormKind::L2 => (self.l2(lambda, mu), None),
            NormKind::Linf => {
                let (eps, res) = self.linf_search(lambda, mu);
                (res, Some(eps))
            }
        }
    }

    pub fn l2(&self, lambda: f64, mu: f64) -> InnerResult {
        let mut delta = Vec::with_capacity(self.d.len());
        let mut value = 0.0;
        let denom = 2.0 * (1.0 + mu);
        for j in 0..self.d.len() {
            let (d, b) = (self.d[j], self.b[j]);
            let t = ((2.0 * d - lambda * b) / denom).clamp(self.lo[j], self.hi[j]);
            value += (d - t) * (d - t) + lambda * b * t + mu * t * t;
            delta.push(t);
        }
        InnerResult { delta, lagrangian_value: value }
    }

    pub fn l1(&self, lambda: f64, mu: f64) -> InnerResult {
        let mut delta = Vec::with_capacity(self.d.len());
        let mut value = 0.0;
        for j in 0..self.d.len() {
            let (d, lb, lo, hi) = (self.d[j], lambda * self.b[j], self.lo[j], self.hi[j]);
            let f = |t: f64| (d - t).abs() + lb * t + mu * t * t;
            // kink first so that ties keep the component unchanged
            let mut best = d.clamp(lo, hi);
            let mut best_val = f(best);
            let mut consider = |t: f64| {
                let t = t.clamp(lo, hi);
                let v = f(t);
                if v < best_val {
                    best = t;
                    best_val = v;
                }
            };
            consider(lo);
            consider(hi);
            if mu > 0.0 {
                // stationary points of the branches t < d and t > d
                consider((1.0 - lb) / (2.0 * mu));
                consider((-1.0 - lb) / (2.0 * mu));
            }
            value += best_val;
            delta.push(best);
        }
        InnerResult { delta, lagrangian_value: value }
    }

    pub fn l0(&self, lambda: f64, mu: f64) -> InnerResult {
        let mut delta = Vec::with_capacity(self.d.len());
        let mut value = 0.0;
        for j in 0..self.d.len() {
            let (d, lb) = (self.d[j], lambda * self.b[j]);
            let keep = lb * d + mu * d * d;
            let t = quadratic_box_min(lb, mu, self.lo[j], self.hi[j]);
            let cost = if (d - t).abs() > L0_TOLERANCE { 1.0 } else { 0.0 };
            let moved = cost + lb * t + mu * t * t;
            if keep < moved {
                value += keep;
                delta.push(d);
            } else {
                value += moved;
                delta.push(t);
            }
        }
        InnerResult { delta, lagrangian_value: value }
    }

    /// Fixed-slack L∞ inner problem over the merged bounds
    /// `[max(lo, d − ε), min(hi, d + ε)]`.
    pub fn linf_fixed(&self, lambda: f64, mu: f64, epsilon: f64) -> InnerResult {
        let mut delta = Vec::with_capacity(self.d.len());
        let mut value = epsilon;
        for j in 0..self.d.len() {
            let lb = lambda * self.b[j];
            let lo = self.lo[j].max(self.d[j] - epsilon);
            let hi = self.hi[j].min(self.d[j] + epsilon);
            let t = quadratic_box_min(lb, mu, lo, hi.max(lo));
            value += lb * t + mu * t * t;
            delta.push(t);
        }
        InnerResult { delta, lagrangian_value: value }
    }

    /// Minimises `ε + inf_δ (λ b·δ + μ‖δ‖²)` over `ε ≥ 0`.
    ///
    /// Each component follows `d_j + s_j ε` until `ε` reaches its breakpoint
    /// `e_j = |m_j − d_j|` (with `m_j` the box minimiser) and stays at `m_j`
    /// afterwards, so the derivative in `ε` is `1 + A + 2μKε` between
    /// consecutive breakpoints, where the sums run over the `K` components
    /// still moving. The value is convex in `ε`; the sweep stops at the first
    /// non-negative derivative.
    pub fn linf_search(&self, lambda: f64, mu: f64) -> (f64, InnerResult) {
        let n = self.d.len();
        let mut breaks: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut slope = 1.0;
        let mut moving = 0usize;
        for j in 0..n {
            let lb = lambda * self.b[j];
            let m = quadratic_box_min(lb, mu, self.lo[j], self.hi[j]);
            let gap = m - self.d[j];
            if gap == 0.0 {
                continue;
            }
            let s = gap.signum();
            let term = s * (lb + 2.0 * mu * self.d[j]);
            slope += term;
            moving += 1;
            breaks.push((gap.abs(), term));
        }
        breaks.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut eps = 0.0;
        let mut settled = false;
        for &(e, term) in &breaks {
            let at_start = slope + 2.0 * mu * moving as f64 * eps;
            if at_start >= 0.0 {
                settled = true;
                break;
            }
            if mu > 0.0 {
                let root = -slope / (2.0 * mu * moving as f64);
                if root < e {
                    eps = root.max(eps);
                    settled = true;
                    break;
                }
            }
            slope -= term;
            moving -= 1;
            eps = e;
        }
        if !settled {
            // past every breakpoint the derivative is 1
            eps = breaks.last().map_or(0.0, |b| b.0).max(eps);
        }
        (eps, self.linf_fixed(lambda, mu, eps))
    }
}

/// Minimiser of `lb·t + μt²` on `[lo, hi]`; for `μ = 0` the endpoint that
/// minimises the linear term, or the point nearest 0 when `lb = 0`.
pub(crate) fn quadratic_box_min(lb: f64, mu: f64, lo: f64, hi: f64) -> f64 {
    if mu > 0.0 {
        (-lb / (2.0 * mu)).clamp(lo, hi)
    } else if lb > 0.0 {
        lo
    } else if lb < 0.0 {
        hi
    } else {
        0.0f64.clamp(lo, hi)
    }
}

pub fn inner_infimum_l2(lambda: f64, mu: f64, problem: &TrustRegionProblem) -> InnerResult {
    Prepared::new(problem).l2(lambda, mu)
}

pub fn inner_infimum_l1(lambda: f64, mu: f64, problem: &TrustRegionProblem) -> InnerResult {
    Prepared::new(problem).l1(lambda, mu)
}

pub fn inner_infimum_l0(lambda: f64, mu: f64, problem: &TrustRegionProblem) -> InnerResult {
    Prepared::new(problem).l0(lambda, mu)
}

pub fn inner_infimum_linf(lambda: f64, mu: f64, epsilon: f64, problem: &TrustRegionProblem) -> InnerResult {
    Prepared::new(problem).linf_fixed(lambda, mu, epsilon)
}

/// Optimal L∞ slack for fixed multipliers and the matching inner result.
pub fn epsilon_search_linf(lambda: f64, mu: f64, problem: &TrustRegionProblem) -> (f64, InnerResult) {
    Prepared::new(problem).linf_search(lambda, mu)
}
