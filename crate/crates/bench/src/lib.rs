//! Fixtures shared by the solver benchmarks.

use singular_plap::{ProblemParams, RegIndex};

/// `(N, p, q, δ) = (3, 2, 2, 2)` at the given `λ` and `n`.
pub fn model(lambda: f64, reg: RegIndex) -> ProblemParams {
    ProblemParams::new(3, 2.0, 2.0, 2.0, lambda, reg)
}
