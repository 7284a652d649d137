//! Trust-region step solver.
//!
//! Solves
//!
//! ```text
//! min_δ ‖d − δ‖_p^p   s.t.   ‖δ‖₂² ≤ r,   b·δ = c,   lo ≤ δ ≤ hi
//! ```
//!
//! by maximising the dual `g(λ, μ) = inf_δ Λ(δ; λ, μ)` over `λ ∈ ℝ, μ ≥ 0`,
//! starting from `(0, 0)`. The inner infimum is closed-form per component
//! (see [`inner`]). The dual is maximised with projected BFGS for L1, L2 and
//! L∞ and with Nelder–Mead for L0, whose dual is nowhere smooth.
//!
//! For piecewise-linear objectives the inner minimiser at the optimal
//! multipliers is generally not unique, so the minimiser returned by the
//! inner solve can miss the equality constraint. Primal recovery then uses
//! the fact that `b·δ(λ, μ)` is non-increasing in `λ` and `‖δ‖²` is
//! non-increasing in `μ`: it brackets the equality in `λ`, interpolates
//! between the two bracketing minimisers, and adjusts `μ` by bisection until
//! complementary slackness holds for the trust region.

mod inner;
mod nelder_mead;
mod quasi_newton;

pub use inner::{
    epsilon_search_linf, inner_infimum_l0, inner_infimum_l1, inner_infimum_l2, inner_infimum_linf, InnerResult,
};

use inner::Prepared;
use serde::{Deserialize, Serialize};

use crate::base::{dot, norm2_sq, DualState, NormKind, Solution, TrustRegionProblem};
use crate::Result;

/// Tolerance on `|b·δ − c|` (relative to `max(1, |c|)`) for a solution to
/// count as feasible.
pub const EQUALITY_TOLERANCE: f64 = 1e-6;
/// Absolute slack on `‖δ‖² ≤ r`.
pub const RADIUS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Iteration cap of the quasi-Newton dual ascent.
    pub max_dual_iterations: usize,
    /// Stop when the projected dual gradient falls below this (max-norm).
    pub dual_tolerance: f64,
    /// Iteration cap of the Nelder–Mead search used for L0.
    pub nelder_mead_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { max_dual_iterations: 100, dual_tolerance: 1e-9, nelder_mead_iterations: 200 }
    }
}

/// Dual value and its gradient at one `(λ, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEval {
    pub value: f64,
    /// `∂g/∂λ = b·δ* − c`
    pub d_lambda: f64,
    /// `∂g/∂μ = ‖δ*‖² − r`
    pub d_mu: f64,
    pub delta: Vec<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub dual: DualState,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Prepared {
    fn dual_eval(&self, lambda: f64, mu: f64) -> DualEval {
        let (res, epsilon) = self.inner(lambda, mu);
        self.finish_eval(lambda, mu, res, epsilon)
    }

    fn finish_eval(&self, lambda: f64, mu: f64, res: InnerResult, epsilon: Option<f64>) -> DualEval {
        let s = dot(&self.b, &res.delta);
        let nrm = norm2_sq(&res.delta);
        DualEval {
            value: res.lagrangian_value - lambda * self.c - mu * self.r,
            d_lambda: s - self.c,
            d_mu: nrm - self.r,
            delta: res.delta,
            epsilon,
        }
    }
}

/// Dual function and envelope gradient. For L∞ a given `epsilon` fixes the
/// slack; otherwise it is optimised.
pub fn dual_value_and_grad(
    lambda: f64,
    mu: f64,
    problem: &TrustRegionProblem,
    epsilon: Option<f64>,
) -> DualEval {
    let prep = Prepared::new(problem);
    match (problem.norm, epsilon) {
        (NormKind::Linf, Some(eps)) => {
            let res = prep.linf_fixed(lambda, mu, eps);
            prep.finish_eval(lambda, mu, res, Some(eps))
        }
        _ => prep.dual_eval(lambda, mu),
    }
}

fn maximize_prepared(prep: &Prepared, settings: &SolverSettings) -> DualOutcome {
    if prep.norm == NormKind::L0 {
        let out = nelder_mead::minimize(
            |p| if p[1] < 0.0 { f64::INFINITY } else { -prep.dual_eval(p[0], p[1]).value },
            [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]],
            settings.nelder_mead_iterations,
            settings.dual_tolerance,
        );
        let [lambda, mu] = out.point;
        return DualOutcome {
            dual: DualState { lambda, mu, epsilon: None },
            value: -out.value,
            iterations: out.iterations,
            converged: out.converged,
        };
    }
    let out = quasi_newton::minimize(
        |p| {
            let e = prep.dual_eval(p[0], p[1]);
            (-e.value, [-e.d_lambda, -e.d_mu])
        },
        [0.0, 0.0],
        settings.max_dual_iterations,
        settings.dual_tolerance,
    );
    let [lambda, mu] = out.point;
    let epsilon = prep.inner(lambda, mu).1;
    DualOutcome {
        dual: DualState { lambda, mu, epsilon },
        value: -out.value,
        iterations: out.iterations,
        converged: out.converged,
    }
}

/// Maximises the dual of `problem` as given (no rescaling of `b`).
pub fn maximize_dual(problem: &TrustRegionProblem, settings: &SolverSettings) -> DualOutcome {
    maximize_prepared(&Prepared::new(problem), settings)
}

/// Step maximising (`sign = 1`) or minimising (`sign = −1`) `b·δ` over the
/// box and the trust region: `δ(t) = clamp(t·sign·b)` with the largest `t`
/// that keeps `‖δ(t)‖² ≤ r`.
fn extreme_step(prep: &Prepared, sign: f64) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> {
        prep.b
            .iter()
            .zip(prep.lo.iter().zip(&prep.hi))
            .map(|(&b, (&lo, &hi))| (t * sign * b).clamp(lo, hi))
            .collect()
    };
    let corner: Vec<f64> = prep
        .b
        .iter()
        .zip(prep.lo.iter().zip(&prep.hi))
        .map(|(&b, (&lo, &hi))| {
            let v = sign * b;
            if v > 0.0 {
                hi
            } else if v < 0.0 {
                lo
            } else {
                0.0
            }
        })
        .collect();
    if norm2_sq(&corner) <= prep.r {
        return corner;
    }
    let mut hi_t = 1.0;
    while norm2_sq(&at(hi_t)) < prep.r && hi_t < 1e300 {
        hi_t *= 2.0;
    }
    let mut lo_t = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo_t + hi_t);
        if mid <= lo_t || mid >= hi_t {
            break;
        }
        if norm2_sq(&at(mid)) <= prep.r {
            lo_t = mid;
        } else {
            hi_t = mid;
        }
    }
    at(lo_t)
}

struct Recovered {
    delta: Vec<f64>,
    lambda: f64,
    mu: f64,
}

/// One end of a bracket: abscissa, residual and whatever the evaluation
/// produced.
struct End<T> {
    x: f64,
    f: f64,
    data: T,
}

/// Shrinks a bracket of a non-increasing function (`lo.f > 0 > hi.f`) by the
/// Illinois variant of false position. Falls back to `split` whenever two
/// steps fail to halve the bracket, so jumps cost no more than bisection.
fn illinois<T>(
    mut lo: End<T>,
    mut hi: End<T>,
    mut eval: impl FnMut(f64) -> End<T>,
    stop: impl Fn(&End<T>, &End<T>) -> bool,
    split: impl Fn(f64, f64) -> f64,
) -> (End<T>, End<T>) {
    let (mut w_lo, mut w_hi) = (lo.f, hi.f);
    let mut last_side = 0i8;
    let mut checkpoint = hi.x - lo.x;
    let mut force_split = false;
    for it in 0..300 {
        if stop(&lo, &hi) {
            break;
        }
        let mut x = if force_split || w_lo - w_hi <= 0.0 {
            split(lo.x, hi.x)
        } else {
            lo.x + (hi.x - lo.x) * w_lo / (w_lo - w_hi)
        };
        if !(x > lo.x && x < hi.x) {
            x = split(lo.x, hi.x);
            if !(x > lo.x && x < hi.x) {
                break;
            }
        }
        let mid = eval(x);
        if mid.f > 0.0 {
            w_lo = mid.f;
            if last_side == 1 {
                w_hi *= 0.5;
            }
            last_side = 1;
            lo = mid;
        } else {
            w_hi = mid.f;
            if last_side == -1 {
                w_lo *= 0.5;
            }
            last_side = -1;
            hi = mid;
        }
        force_split = false;
        if it % 2 == 1 {
            let width = hi.x - lo.x;
            force_split = width > 0.5 * checkpoint;
            checkpoint = width;
        }
    }
    (lo, hi)
}

/// Finds `λ` with `b·δ(λ, μ) = c` for fixed `μ` and returns the matching
/// step, interpolating across a jump of the inner minimiser if needed.
fn lambda_root(prep: &Prepared, mu: f64, guess: f64) -> (f64, Vec<f64>) {
    let tol = 1e-12 * prep.c.abs().max(1.0);
    // b·δ is non-increasing in λ, so the residual is too
    let eval = |lambda: f64| {
        let delta = prep.inner(lambda, mu).0.delta;
        End { x: lambda, f: dot(&prep.b, &delta) - prep.c, data: delta }
    };

    let first = eval(guess);
    if first.f.abs() <= tol {
        return (guess, first.data);
    }
    let mut step = guess.abs().max(1.0);
    let (mut lo, mut hi);
    if first.f > 0.0 {
        lo = first;
        loop {
            let cand = eval(guess + step);
            if cand.f <= 0.0 || step > 1e300 {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2.0;
        }
    } else {
        hi = first;
        loop {
            let cand = eval(guess - step);
            if cand.f >= 0.0 || step > 1e300 {
                lo = cand;
                break;
            }
            hi = cand;
            step *= 2.0;
        }
    }

    let (lo, hi) = illinois(
        lo,
        hi,
        eval,
        |lo, hi| lo.f.abs() <= tol || hi.f.abs() <= tol || lo.f - hi.f <= tol,
        |a, b| 0.5 * (a + b),
    );
    if hi.f.abs() <= tol {
        return (hi.x, hi.data);
    }
    if lo.f.abs() <= tol {
        return (lo.x, lo.data);
    }
    let theta = if lo.f > hi.f { (lo.f / (lo.f - hi.f)).clamp(0.0, 1.0) } else { 0.0 };
    let delta = lo.data.iter().zip(&hi.data).map(|(a, b)| a + theta * (b - a)).collect();
    (0.5 * (lo.x + hi.x), delta)
}

/// Adjusts `(λ, μ)` until the recovered step meets the equality exactly and
/// the trust region with complementary slackness.
fn recover_primal(prep: &Prepared, lambda0: f64, mu0: f64) -> Recovered {
    let r = prep.r;
    let fits = |delta: &[f64]| norm2_sq(delta) <= r * (1.0 + 1e-10);
    let tight = |delta: &[f64]| norm2_sq(delta) >= r * (1.0 - 1e-7);
    // residual is non-positive exactly when the step fits
    let end = |mu: f64, (lambda, delta): (f64, Vec<f64>)| End {
        x: mu,
        f: norm2_sq(&delta) - r * (1.0 + 1e-10),
        data: (lambda, delta),
    };

    let (lambda, delta) = lambda_root(prep, mu0, lambda0);
    if fits(&delta) && (mu0 == 0.0 || tight(&delta)) {
        return Recovered { delta, lambda, mu: mu0 };
    }

    let (lo, hi);
    if fits(&delta) {
        // μ too large: the trust region is slack
        let (l0, d0) = lambda_root(prep, 0.0, lambda);
        if fits(&d0) {
            return Recovered { delta: d0, lambda: l0, mu: 0.0 };
        }
        lo = end(0.0, (l0, d0));
        hi = end(mu0, (lambda, delta));
    } else {
        let mut below = end(mu0, (lambda, delta));
        let mut trial = (2.0 * mu0).max(1e-6);
        loop {
            let cand = end(trial, lambda_root(prep, trial, below.data.0));
            if fits(&cand.data.1) || trial > 1e100 {
                hi = cand;
                break;
            }
            below = cand;
            trial *= 4.0;
        }
        lo = below;
    }

    let last_lambda = std::cell::Cell::new(hi.data.0);
    let (_, hi) = illinois(
        lo,
        hi,
        |mu| {
            let out = end(mu, lambda_root(prep, mu, last_lambda.get()));
            last_lambda.set(out.data.0);
            out
        },
        |lo, hi| tight(&hi.data.1) || hi.x - lo.x <= 1e-12 * hi.x,
        |a, b| if a > 0.0 && b > 4.0 * a { (a * b).sqrt() } else { 0.5 * (a + b) },
    );
    Recovered { delta: hi.data.1, lambda: hi.data.0, mu: hi.x }
}

/// Solves the trust-region problem.
///
/// `b` is rescaled to unit length (with `c` alongside) before the dual
/// ascent; reported multipliers refer to the original scaling. If no step
/// satisfies all constraints, returns the step that moves `b·δ` as far
/// towards `c` as the box and trust region allow, flagged infeasible.
pub fn solve(problem: &TrustRegionProblem, settings: &SolverSettings) -> Result<Solution> {
    problem.validate()?;
    let b_norm = norm2_sq(&problem.b).sqrt();
    let mut prep = Prepared::new(problem);
    prep.b.iter_mut().for_each(|v| *v /= b_norm);
    prep.c /= b_norm;

    let c_tol = 1e-10 * prep.c.abs().max(1.0);
    let upper = extreme_step(&prep, 1.0);
    let lower = extreme_step(&prep, -1.0);

    let (delta, dual, iterations) = if prep.c > dot(&prep.b, &upper) + c_tol {
        (upper, DualState::default(), 0)
    } else if prep.c < dot(&prep.b, &lower) - c_tol {
        (lower, DualState::default(), 0)
    } else {
        let outcome = maximize_prepared(&prep, settings);
        let DualState { lambda, mu, .. } = outcome.dual;
        let (res, _) = prep.inner(lambda, mu);
        let delta = res.delta;
        let nrm = norm2_sq(&delta);
        let settled = (dot(&prep.b, &delta) - prep.c).abs() <= c_tol
            && nrm <= prep.r * (1.0 + 1e-10)
            && (mu == 0.0 || nrm >= prep.r * (1.0 - 1e-7));
        let rec = if settled { Recovered { delta, lambda, mu } } else { recover_primal(&prep, lambda, mu) };
        let epsilon = prep.inner(rec.lambda, rec.mu).1;
        (rec.delta, DualState { lambda: rec.lambda, mu: rec.mu, epsilon }, outcome.iterations)
    };

    let mut delta = delta;
    let nrm = norm2_sq(&delta);
    if nrm > problem.r {
        let scale = (problem.r / nrm).sqrt();
        delta.iter_mut().for_each(|v| *v *= scale);
    }
    for (j, v) in delta.iter_mut().enumerate() {
        *v = v.clamp(prep.lo[j], prep.hi[j]);
    }

    let feasible = is_feasible(problem, &delta);
    let dual = DualState {
        lambda: dual.lambda / b_norm,
        mu: dual.mu,
        epsilon: if problem.norm == NormKind::Linf { Some(dual.epsilon.unwrap_or(0.0)) } else { None },
    };
    Ok(Solution { objective: problem.objective(&delta), delta, dual, feasible, iterations })
}

/// The three constraints at the tolerances used to flag solutions.
pub fn is_feasible(problem: &TrustRegionProblem, delta: &[f64]) -> bool {
    let eq = (dot(&problem.b, delta) - problem.c).abs() <= EQUALITY_TOLERANCE * problem.c.abs().max(1.0);
    let ball = norm2_sq(delta) <= problem.r + RADIUS_TOLERANCE;
    let boxed = problem.x_tilde.iter().zip(delta).all(|(&xt, &d)| {
        let v = xt + d;
        v >= problem.bounds.lower - 1e-12 && v <= problem.bounds.upper + 1e-12
    });
    eq && ball && boxed
}
