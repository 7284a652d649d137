//! Projected BFGS for two variables with a lower bound of zero on the second.

pub(crate) struct Outcome {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

type Mat = [[f64; 2]; 2];

const IDENTITY: Mat = [[1.0, 0.0], [0.0, 1.0]];

fn project(p: [f64; 2]) -> [f64; 2] {
    [p[0], p[1].max(0.0)]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &Mat, s: [f64; 2], y: [f64; 2]) -> Mat {
    let rho = 1.0 / dot(s, y);
    let hy = [h[0][0] * y[0] + h[0][1] * y[1], h[1][0] * y[0] + h[1][1] * y[1]];
    let yhy = dot(y, hy);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    out
}

/// Minimises `f` over `{(a, m) : m ≥ 0}` starting from `start`.
///
/// `f` returns the value and gradient. The search direction is the
/// quasi-Newton step, restricted to the first coordinate while the bound is
/// active and the gradient pushes into it. Steps are backtracked by halving
/// until the Armijo condition holds. Stops when the projected gradient is
/// below `tol` in max-norm, when no decrease can be found, or after
/// `max_iter` iterations.
pub(crate) fn minimize<F>(mut f: F, start: [f64; 2], max_iter: usize, tol: f64) -> Outcome
where
    F: FnMut([f64; 2]) -> (f64, [f64; 2]),
{
    let mut x = project(start);
    let (mut fx, mut g) = f(x);
    let mut h = IDENTITY;
    let mut fresh = true;
    let mut stalls = 0;

    for it in 0..max_iter {
        let bound_active = x[1] <= 0.0 && g[1] > 0.0;
        let pg = [g[0], if bound_active { 0.0 } else { g[1] }];
        if pg[0].abs().max(pg[1].abs()) <= tol {
            return Outcome { point: x, value: fx, iterations: it, converged: true };
        }

        let mut dir = if bound_active {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let b00 = if det > 0.0 && h[1][1] > 0.0 { h[1][1] / det } else { 1.0 };
            [-g[0] / b00, 0.0]
        } else {
            [-(h[0][0] * g[0] + h[0][1] * g[1]), -(h[1][0] * g[0] + h[1][1] * g[1])]
        };
        if dot(dir, pg) >= 0.0 || !dir.iter().all(|v| v.is_finite()) {
            h = IDENTITY;
            fresh = true;
            dir = [-pg[0], -pg[1]];
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = project([x[0] + alpha * dir[0], x[1] + alpha * dir[1]]);
            let s = [trial[0] - x[0], trial[1] - x[1]];
            let (ft, gt) = f(trial);
            if ft.is_finite() && ft <= fx + ARMIJO * dot(g, s) {
                accepted = Some((trial, s, ft, gt));
                break;
            }
            alpha *= 0.5;
        }

        let Some((trial, s, ft, gt)) = accepted else {
            if h != IDENTITY {
                h = IDENTITY;
                fresh = true;
                continue;
            }
            return Outcome { point: x, value: fx, iterations: it + 1, converged: false };
        };

        let y = [gt[0] - g[0], gt[1] - g[1]];
        let sy = dot(s, y);
        if sy > 1e-16 * dot(s, s).sqrt() * dot(y, y).sqrt() && sy > 0.0 {
            if fresh {
                let scale = sy / dot(y, y);
                h = [[scale, 0.0], [0.0, scale]];
                fresh = false;
            }
            h = bfgs_update(&h, s, y);
        }

        if fx - ft <= 1e-15 * fx.abs().max(1.0) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x = trial;
        fx = ft;
        g = gt;
        if stalls >= 3 {
            return Outcome { point: x, value: fx, iterations: it + 1, converged: false };
        }
    }
    Outcome { point: x, value: fx, iterations: max_iter, converged: false }
}
