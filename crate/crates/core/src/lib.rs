//! Boundary-following gradient attacks for minimal L0/L1/L2/L∞ adversarial
//! perturbations.
//!
//! The attack starts from an adversarial point far from the clean input,
//! bisects to the decision boundary and then walks along it. Every step solves
//! a small trust-region problem: minimise the distance to the clean input
//! subject to the pixel box, a linearised boundary constraint and a bound on
//! the squared step length. [`trust_region`] solves that problem through its
//! two-dimensional Lagrange dual.

pub mod attack;
pub mod base;
pub mod criterion;
mod error;
pub mod models;
pub mod trust_region;

pub use attack::{
    binary_search_to_boundary, find_starting_point, run_adam_pgd, run_attack, run_pgd,
    AttackConfig, AttackResult, PgdConfig, StartPoint, TracePoint,
};
pub use base::{lp_distance, lp_norm, project_box, BoxBounds, DualState, NormKind, Solution, TrustRegionProblem};
pub use criterion::Criterion;
pub use error::{Error, Result};
pub use models::{Activation, Dataset, Layer, Model};
pub use trust_region::SolverSettings;
