//! Radial solvers for the singular quasilinear problem
//!
//! ```text
//! -Δp u = λ u^-δ + u^q  in B₁ ⊂ R^N,    u = 0 on ∂B₁,    u > 0,
//! ```
//!
//! and its regularizations `λ (u + 1/n)^-δ`: a variational finite-volume
//! discretization, convex inversion of `-Δp`, the first eigenpair, damped
//! and deflated Newton, sub/super-solutions, shooting-based enumeration of
//! both solution branches, and numerical checks of the qualitative theory.

pub mod branch;
pub mod eigen;
mod error;
pub mod grid;
pub mod params;
pub mod plap;
pub mod solve;
mod tridiag;
pub mod verify;

pub use branch::{
    find_roots, nonexistence_bound, shoot, shot_profile, sweep_lambda, BifurcationDiagram, BranchTag,
    DiagramPoint, ScanOptions, ShotKind, ShotOutcome,
};
pub use eigen::{first_eigenpair, rayleigh, EigenPair};
pub use error::{Error, ExponentBound, Result};
pub use grid::{build_grid, integrate, seminorm_p, Field, GridSpec, RadialGrid};
pub use params::{
    derived_exponents, scale_field, validate_params, DerivedExponents, ProblemParams, RegIndex,
};
pub use plap::{apply_plap, energy, linearize, residual, Nonlinearity, OperatorConfig};
pub use solve::{
    invert_plap, regularization_ladder, solve_full, solve_minimal, solve_pure_singular,
    solve_upper, LadderProblem, LadderResult, SolveResult,
};
pub use tridiag::Tridiagonal;
pub use verify::{Check, Status, VerificationReport};
