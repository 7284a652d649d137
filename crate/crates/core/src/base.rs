//! Numeric primitives shared by every other module: norms, the pixel box and
//! the per-step trust-region problem.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Components closer than this are treated as equal by the L0 distance.
pub const L0_TOLERANCE: f64 = 1e-9;

/// Valid value range `[lower, upper]` for every input component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: f64,
    pub upper: f64,
}

impl BoxBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidBounds(format!(
                "need finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter().all(|&x| x >= self.lower && x <= self.upper)
    }

    pub fn clamp(&self, v: &mut [f64]) {
        for x in v.iter_mut() {
            *x = x.clamp(self.lower, self.upper);
        }
    }
}

impl Default for BoxBounds {
    fn default() -> Self {
        Self { lower: 0.0, upper: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L0,
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [NormKind::L0, NormKind::L1, NormKind::L2, NormKind::Linf];
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L0 => "l0",
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::Linf => "linf",
        })
    }
}

impl FromStr for NormKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l0" => Ok(NormKind::L0),
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "l_inf" | "inf" => Ok(NormKind::Linf),
            other => Err(format!("unknown norm '{other}'")),
        }
    }
}

/// Norm of a single vector. L0 is reported as the fraction of non-zero
/// components.
pub fn lp_norm(v: &[f64], p: NormKind) -> f64 {
    match p {
        NormKind::L0 => {
            if v.is_empty() {
                return 0.0;
            }
            let count = v.iter().filter(|x| x.abs() > L0_TOLERANCE).count();
            count as f64 / v.len() as f64
        }
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// `‖a − b‖_p`, with L0 normalised by the dimension.
pub fn lp_distance(a: &[f64], b: &[f64], p: NormKind) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(lp_norm(&diff, p))
}

/// Componentwise clamp of `v` into `[lo, hi]`.
pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    if lo.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: lo.len() });
    }
    if hi.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: hi.len() });
    }
    if let Some(j) = (0..v.len()).find(|&j| !(lo[j] <= hi[j])) {
        return Err(Error::InvalidBounds(format!(
            "component {j}: lower {} exceeds upper {}",
            lo[j], hi[j]
        )));
    }
    Ok(v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.clamp(l, h))
        .collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// One instance of the per-step problem
///
/// ```text
/// min_δ ‖x − x̃ − δ‖_p   s.t.   lower ≤ x̃ + δ ≤ upper,   b·δ = c,   ‖δ‖₂² ≤ r
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionProblem {
    /// Clean input.
    pub x: Vec<f64>,
    /// Current perturbed input.
    pub x_tilde: Vec<f64>,
    /// Normal of the (linearised) boundary.
    pub b: Vec<f64>,
    /// Required value of `b·δ`.
    pub c: f64,
    /// Bound on the squared L2 step length.
    pub r: f64,
    pub bounds: BoxBounds,
    pub norm: NormKind,
}

impl TrustRegionProblem {
    pub fn new(
        x: Vec<f64>,
        x_tilde: Vec<f64>,
        b: Vec<f64>,
        c: f64,
        r: f64,
        bounds: BoxBounds,
        norm: NormKind,
    ) -> Result<Self> {
        let problem = Self { x, x_tilde, b, c, r, bounds, norm };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if n == 0 {
            return Err(Error::InvalidProblem("empty input".into()));
        }
        for v in [&self.x_tilde, &self.b] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.x) && finite(&self.x_tilde) && finite(&self.b) && self.c.is_finite()) {
            return Err(Error::InvalidProblem("non-finite entries".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidProblem(format!("trust radius must be positive, got {}", self.r)));
        }
        if !(self.bounds.lower < self.bounds.upper) {
            return Err(Error::InvalidBounds(format!(
                "[{}, {}]",
                self.bounds.lower, self.bounds.upper
            )));
        }
        if !self.bounds.contains(&self.x) || !self.bounds.contains(&self.x_tilde) {
            return Err(Error::InvalidProblem("x and x_tilde must lie inside the box".into()));
        }
        if self.b.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidProblem("boundary normal is the zero vector".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `d = x − x̃`, the step that would reach the clean input.
    pub fn residual(&self) -> Vec<f64> {
        self.x.iter().zip(&self.x_tilde).map(|(a, b)| a - b).collect()
    }

    /// Box limits on the step: `lower − x̃ ≤ δ ≤ upper − x̃`.
    pub fn step_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.x_tilde.iter().map(|v| self.bounds.lower - v).collect();
        let hi = self.x_tilde.iter().map(|v| self.bounds.upper - v).collect();
        (lo, hi)
    }

    /// Distance `‖x − x̃ − δ‖_p` reached by `delta`, in plain norm units.
    pub fn objective(&self, delta: &[f64]) -> f64 {
        let rest: Vec<f64> = self
            .x
            .iter()
            .zip(&self.x_tilde)
            .zip(delta)
            .map(|((a, b), d)| a - b - d)
            .collect();
        lp_norm(&rest, self.norm)
    }
}

/// Dual variables of the trust-region Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualState {
    /// Multiplier of the boundary equality (free sign).
    pub lambda: f64,
    /// Multiplier of the trust-region constraint (non-negative).
    pub mu: f64,
    /// Optimal L∞ slack, present only for L∞ problems.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub delta: Vec<f64>,
    /// `‖x − x̃ − δ‖_p` in plain norm units (L0 as a fraction).
    pub objective: f64,
    pub dual: DualState,
    pub feasible: bool,
    pub iterations: usize,
}
