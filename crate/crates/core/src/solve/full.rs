//! The full problem `-Δp u = λ (u + 1/n)^-δ + u^q`.

use std::sync::Arc;

use super::newton::{damped_newton, NewtonOptions};
use super::singular::default_seed;
use super::SolveResult;
use crate::branch::{find_roots, shot_profile, ScanOptions};
use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::params::ProblemParams;
use crate::plap::Nonlinearity;

/// Damped Newton from `seed`, deflating every field in `deflated`.
pub fn solve_full(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    seed: &Field,
    deflated: &[Field],
    tol: f64,
) -> Result<SolveResult> {
    let opts = NewtonOptions {
        tol,
        deflated: deflated.to_vec(),
        ..NewtonOptions::default()
    };
    solve_full_with(grid, params, seed, &opts)
}

pub fn solve_full_with(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    seed: &Field,
    opts: &NewtonOptions,
) -> Result<SolveResult> {
    if !Arc::ptr_eq(seed.grid(), grid) && seed.grid().spec() != grid.spec() {
        return Err(Error::GridMismatch);
    }
    let nl = Nonlinearity::full(params);
    let out = damped_newton(seed, &nl, params.p, opts, None)?;
    Ok(SolveResult {
        u: out.u,
        residual_sup: out.residual,
        iterations: out.iterations,
        bracket: None,
    })
}

/// Natural continuation of the minimal branch along ascending `lambdas`,
/// stopping at the first failure (which signals the fold).
pub fn continue_lower_branch(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    lambdas: &[f64],
    tol: f64,
) -> Vec<(f64, SolveResult)> {
    let mut out: Vec<(f64, SolveResult)> = Vec::new();
    for &lambda in lambdas {
        let pl = params.with_lambda(lambda);
        let seed = match out.last() {
            Some((_, prev)) => prev.u.clone(),
            None => default_seed(grid, &pl),
        };
        match solve_full(grid, &pl, &seed, &[], tol) {
            Ok(res) => out.push((lambda, res)),
            Err(_) => break,
        }
    }
    out
}

const CONTINUATION_STEPS: usize = 16;

/// Minimal solution at `params.lambda`, continued from `λ/16` in equal steps.
pub fn solve_minimal(grid: &Arc<RadialGrid>, params: &ProblemParams, tol: f64) -> Result<SolveResult> {
    let lambdas: Vec<f64> = (1..=CONTINUATION_STEPS)
        .map(|i| params.lambda * i as f64 / CONTINUATION_STEPS as f64)
        .collect();
    let mut path = continue_lower_branch(grid, params, &lambdas, tol);
    if path.len() < CONTINUATION_STEPS {
        return Err(Error::NoConvergence {
            solver: "lower-branch continuation",
            iterations: path.len(),
            last: path.last().map_or(0.0, |(l, _)| *l),
        });
    }
    Ok(path.pop().expect("nonempty path").1)
}

/// Second solution: Newton from the shot profile of the largest shooting
/// root, deflating `lower`.
pub fn solve_upper(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    lower: &Field,
    scan: &ScanOptions,
    tol: f64,
) -> Result<SolveResult> {
    let roots = find_roots(params, scan)?;
    if roots.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "no upper shooting root at lambda = {} ({} roots)",
            params.lambda,
            roots.len()
        )));
    }
    let seed = shot_profile(params, roots[roots.len() - 1], grid, scan.ode_tol)?;
    solve_full(grid, params, &seed, std::slice::from_ref(lower), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::params::RegIndex;
    use crate::plap::residual;
    use crate::solve::solve_pure_singular;

    fn params(lambda: f64) -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.0, 2.0, lambda, RegIndex::Finite(100))
    }

    #[test]
    fn minimal_solution_dominates_pure_singular() {
        let g = build_grid(512, 2.0, 3).unwrap();
        let p = params(1.0);
        let pure = solve_pure_singular(&g, &p, 1e-11).unwrap().u;
        let full = solve_full(&g, &p, &pure, &[], 1e-11).unwrap();
        assert!(full.residual_sup <= 1e-11);
        let r = residual(&full.u, &p).unwrap();
        assert!(r.values().iter().all(|v| v.is_finite()));
        for (a, b) in full.u.values().iter().zip(pure.values()) {
            assert!(*a >= b - 1e-8);
        }
    }

    #[test]
    fn deflation_finds_a_second_solution() {
        let g = build_grid(512, 2.0, 3).unwrap();
        let p = params(1.0);
        let pure = solve_pure_singular(&g, &p, 1e-11).unwrap().u;
        let low = solve_full(&g, &p, &pure, &[], 1e-11).unwrap().u;
        let seed = g.from_fn(|r| 20.0 * (1.0 - r * r));
        let high = solve_full(&g, &p, &seed, std::slice::from_ref(&low), 1e-10).unwrap().u;
        assert!(high.sup_distance(&low) >= 1e-4);
        assert!(high.sup_norm() > low.sup_norm() + 1.0);
    }

    #[test]
    fn continuation_grows_the_minimal_branch() {
        let g = build_grid(256, 2.0, 3).unwrap();
        let branch = continue_lower_branch(&g, &params(0.0), &[0.5, 1.0, 2.0, 4.0], 1e-10);
        assert_eq!(branch.len(), 4);
        let sups: Vec<f64> = branch.iter().map(|(_, r)| r.u.sup_norm()).collect();
        assert!(sups.windows(2).all(|w| w[0] < w[1]));
    }
}
