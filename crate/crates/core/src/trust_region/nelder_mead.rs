//! Two-dimensional Nelder–Mead with reflection 1, expansion 2, contraction
//! 0.5 and shrink 0.5.

pub(crate) struct Outcome {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn lerp(from: [f64; 2], to: [f64; 2], t: f64) -> [f64; 2] {
    [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
}

/// Minimises `f` from the given initial simplex. Converges when both the
/// spread of values and the simplex diameter fall below `tol` (relative).
pub(crate) fn minimize<F>(mut f: F, simplex: [[f64; 2]; 3], max_iter: usize, tol: f64) -> Outcome
where
    F: FnMut([f64; 2]) -> f64,
{
    let mut pts: Vec<([f64; 2], f64)> = simplex.iter().map(|&p| (p, f(p))).collect();

    for it in 0..max_iter {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, second, worst) = (pts[0], pts[1], pts[2]);

        let spread = (worst.1 - best.1).abs();
        let diameter = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (a.0[0] - b.0[0]).hypot(a.0[1] - b.0[1])))
            .fold(0.0, f64::max);
        let scale = 1.0 + best.0[0].abs().max(best.0[1].abs());
        if spread.is_finite() && spread <= tol * best.1.abs().max(1.0) && diameter <= tol * scale {
            return Outcome { point: best.0, value: best.1, iterations: it, converged: true };
        }

        let centroid = lerp(best.0, second.0, 0.5);
        let reflected = lerp(centroid, worst.0, -REFLECT);
        let fr = f(reflected);

        if fr < best.1 {
            let expanded = lerp(centroid, worst.0, -EXPAND);
            let fe = f(expanded);
            pts[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second.1 {
            pts[2] = (reflected, fr);
            continue;
        }
        let (contracted, fc, accept) = if fr < worst.1 {
            let p = lerp(centroid, reflected, CONTRACT);
            let v = f(p);
            (p, v, v <= fr)
        } else {
            let p = lerp(centroid, worst.0, CONTRACT);
            let v = f(p);
            (p, v, v < worst.1)
        };
        if accept {
            pts[2] = (contracted, fc);
            continue;
        }
        for k in 1..3 {
            let p = lerp(best.0, pts[k].0, SHRINK);
            pts[k] = (p, f(p));
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    Outcome { point: pts[0].0, value: pts[0].1, iterations: max_iter, converged: false }
}
