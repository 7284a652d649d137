//! Reference answers for checking the solver and the attacks at small scale.
//!
//! [`grid_solve`] scans a lattice of steps. For every choice of pivot
//! coordinate with a nonzero normal component it places the remaining
//! coordinates on the lattice and solves the pivot from the equality, so
//! every candidate it reports is exactly feasible and its objective is an
//! upper bound on the optimum.

use boundwalk::{BoxBounds, DualState, NormKind, Solution, TrustRegionProblem};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("grid oracle supports at most {max} dimensions, got {dim}")]
    TooManyDimensions { dim: usize, max: usize },
    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("{0} has no closed-form hyperplane distance")]
    Unsupported(NormKind),
    #[error("normal vector is zero")]
    ZeroNormal,
    #[error("no subset of components reaches the other side")]
    Unreachable,
    #[error("length mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Problem(#[from] boundwalk::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Largest dimension [`l0_minimal_linear`] enumerates.
pub const MAX_SUBSET_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: f64,
    pub max_dim: usize,
}

impl GridSpec {
    pub fn new(resolution: f64) -> Self {
        Self { resolution, max_dim: 3 }
    }
}

/// Candidate values of one step coordinate: the lattice `lo + k·res` inside
/// `[lo, hi] ∩ [−√r, √r]`, plus `lo`, `hi`, `0` and `d` when admissible.
fn axis(lo: f64, hi: f64, d: f64, res: f64, r: f64) -> Vec<f64> {
    let reach = r.sqrt();
    let (a, b) = (lo.max(-reach), hi.min(reach));
    let mut out = Vec::new();
    if a <= b {
        let first = ((a - lo) / res).ceil().max(0.0) as u64;
        let mut k = first;
        loop {
            let v = lo + k as f64 * res;
            if v > b {
                break;
            }
            out.push(v);
            k += 1;
        }
        for v in [lo, hi, 0.0, d] {
            if v >= a && v <= b {
                out.push(v);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Exhaustive lattice search. Returns an infeasible solution with infinite
/// objective when no lattice point satisfies the constraints.
pub fn grid_solve(problem: &TrustRegionProblem, spec: &GridSpec) -> Result<Solution> {
    problem.validate()?;
    let n = problem.dim();
    if n > spec.max_dim.min(3) {
        return Err(OracleError::TooManyDimensions { dim: n, max: spec.max_dim.min(3) });
    }
    if !(spec.resolution > 0.0 && spec.resolution.is_finite()) {
        return Err(OracleError::InvalidResolution(spec.resolution));
    }
    let (lo, hi) = problem.step_bounds();
    let d = problem.residual();
    let axes: Vec<Vec<f64>> = (0..n).map(|j| axis(lo[j], hi[j], d[j], spec.resolution, problem.r)).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0usize;
    let mut delta = vec![0.0; n];
    for pivot in (0..n).filter(|&k| problem.b[k] != 0.0) {
        let others: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
        let counts: Vec<usize> = others.iter().map(|&j| axes[j].len()).collect();
        if counts.iter().any(|&c| c == 0) {
            continue;
        }
        let mut idx = vec![0usize; others.len()];
        'outer: loop {
            let mut partial = 0.0;
            let mut sq = 0.0;
            for (slot, &j) in others.iter().enumerate() {
                let v = axes[j][idx[slot]];
                delta[j] = v;
                partial += problem.b[j] * v;
                sq += v * v;
            }
            if sq <= problem.r {
                let v = (problem.c - partial) / problem.b[pivot];
                if v >= lo[pivot] && v <= hi[pivot] && sq + v * v <= problem.r {
                    delta[pivot] = v;
                    evaluated += 1;
                    let obj = problem.objective(&delta);
                    if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                        best = Some((obj, delta.clone()));
                    }
                }
            }
            // odometer increment
            for slot in 0..idx.len() {
                idx[slot] += 1;
                if idx[slot] < counts[slot] {
                    continue 'outer;
                }
                idx[slot] = 0;
            }
            break;
        }
    }

    Ok(match best {
        Some((objective, delta)) => {
            Solution { delta, objective, dual: DualState::default(), feasible: true, iterations: evaluated }
        }
        None => Solution {
            delta: vec![0.0; n],
            objective: f64::INFINITY,
            dual: DualState::default(),
            feasible: false,
            iterations: evaluated,
        },
    })
}

/// Distance from `x` to the hyperplane `w·z + offset = 0` in norm `p`,
/// ignoring any box.
pub fn linear_minimal_distance(w: &[f64], offset: f64, x: &[f64], p: NormKind) -> Result<f64> {
    if w.len() != x.len() {
        return Err(OracleError::DimensionMismatch(w.len(), x.len()));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(OracleError::ZeroNormal);
    }
    let dual = match p {
        NormKind::L2 => w.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Linf => w.iter().map(|v| v.abs()).sum(),
        NormKind::L1 => w.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        NormKind::L0 => return Err(OracleError::Unsupported(p)),
    };
    let value: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + offset;
    Ok(value.abs() / dual)
}

/// Fewest components of `x` that must change, within `bounds`, to make
/// `w·z + offset` strictly positive.
pub fn l0_minimal_linear(w: &[f64], offset: f64, x: &[f64], bounds: &BoxBounds) -> Result<usize> {
    let n = w.len();
    if n != x.len() {
        return Err(OracleError::DimensionMismatch(n, x.len()));
    }
    if n > MAX_SUBSET_DIM {
        return Err(OracleError::TooManyDimensions { dim: n, max: MAX_SUBSET_DIM });
    }
    let base: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + offset;
    if base > 0.0 {
        return Ok(0);
    }
    // best gain from moving component j to its favourable extreme
    let gain: Vec<f64> = w
        .iter()
        .zip(x)
        .map(|(&wj, &xj)| {
            let target = if wj > 0.0 { bounds.upper } else { bounds.lower };
            wj * (target - xj)
        })
        .collect();
    let mut best: Option<usize> = None;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let total: f64 = (0..n).filter(|j| mask & (1 << j) != 0).map(|j| gain[j]).sum();
        if base + total > 0.0 {
            best = Some(size);
        }
    }
    best.ok_or(OracleError::Unreachable)
}
