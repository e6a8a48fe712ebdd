//! Solvers: inverse p-Laplacian, pure singular problem, regularization
//! ladder, sub/super-solutions and deflated Newton for the full problem.

mod barrier;
mod full;
mod invert;
mod newton;
mod singular;

pub use barrier::{
    largest_sub_coefficient, mu_root, sub_solution, super_solution, super_solution_with,
    uniqueness_radius, BarrierConstants,
};
pub use full::{continue_lower_branch, solve_full, solve_full_with, solve_minimal, solve_upper};
pub use invert::{invert_plap, invert_plap_with, Inversion};
pub use newton::NewtonOptions;
pub use singular::{
    calibrate_t, calibration_cache_get, calibration_cache_insert, regularization_ladder,
    solve_pure_singular, solve_pure_singular_with, LadderProblem, SingularMethod,
    SingularOptions,
};

use crate::grid::Field;

/// A converged discrete solution.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: Field,
    /// Relative residual (backward error), see [`crate::plap::relative_residual`].
    pub residual_sup: f64,
    pub iterations: usize,
    /// `(sub, super)` with `sub <= u <= super` certified nodewise.
    pub bracket: Option<(Field, Field)>,
}

#[derive(Debug, Clone)]
pub struct LadderResult {
    pub entries: Vec<(u64, Field)>,
    /// Nodewise Aitken extrapolation of the last three entries.
    pub extrapolated_limit: Field,
    /// `max (u_n - u_{n'})₊` over nodes and consecutive pairs `n < n'`.
    pub monotone_violation: f64,
}

impl LadderResult {
    /// Recomputes [`LadderResult::monotone_violation`] and the extrapolation
    /// from `entries` in their current order.
    pub fn from_entries(entries: Vec<(u64, Field)>) -> Self {
        let monotone_violation = entries
            .windows(2)
            .map(|w| {
                w[0].1
                    .values()
                    .iter()
                    .zip(w[1].1.values())
                    .fold(0.0f64, |acc, (a, b)| acc.max(a - b))
            })
            .fold(0.0f64, f64::max);
        let extrapolated_limit = aitken(&entries);
        Self {
            entries,
            extrapolated_limit,
            monotone_violation,
        }
    }

    pub fn max_sup_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, u)| u.sup_norm())
            .fold(0.0, f64::max)
    }
}

fn aitken(entries: &[(u64, Field)]) -> Field {
    let k = entries.len();
    let last = entries[k - 1].1.clone();
    if k < 3 {
        return last;
    }
    let (x0, x1, x2) = (&entries[k - 3].1, &entries[k - 2].1, &last);
    let vals = x0
        .values()
        .iter()
        .zip(x1.values())
        .zip(x2.values())
        .map(|((&a, &b), &c)| {
            let d1 = c - b;
            let denom = d1 - (b - a);
            let acc = c - d1 * d1 / denom;
            // fall back to the last term where the sequence is not geometric
            if denom.abs() > 1e-14 * (1.0 + c.abs()) && acc.is_finite() && d1 * (acc - c) >= 0.0 {
                acc
            } else {
                c
            }
        })
        .collect();
    Field::new(last.grid().clone(), vals)
}
