//! The pure singular problem `-Δp u = λ (u + 1/n)^-δ`, its regularization
//! ladder in `n`, and calibration of the sup-norm constant `T`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::invert::invert_by_flux;
use super::newton::{damped_newton, NewtonOptions};
use super::{LadderResult, SolveResult};
use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::params::{derived_exponents, ProblemParams, RegIndex};
use crate::plap::{relative_residual, residual_unchecked, Nonlinearity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularMethod {
    #[default]
    Newton,
    /// Damped fixed-point iteration `v ← (1-θ)v + θ S(v)`,
    /// `S(v) = (-Δp)⁻¹ λ(v + 1/n)^-δ`. Requires a finite `n`.
    Picard,
}

#[derive(Debug, Clone)]
pub struct SingularOptions {
    pub tol: f64,
    pub method: SingularMethod,
    pub max_iter: usize,
    /// Iterates are projected into `[sub, super]`.
    pub bracket: Option<(Field, Field)>,
    pub seed: Option<Field>,
}

impl SingularOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            method: SingularMethod::Newton,
            max_iter: 200,
            bracket: None,
            seed: None,
        }
    }
}

/// A positive profile with the expected size and boundary behaviour.
pub(crate) fn default_seed(grid: &Arc<RadialGrid>, params: &ProblemParams) -> Field {
    let ex = derived_exponents(params);
    let p = params.p;
    let amp = 0.3 * params.lambda.max(1e-300).powf(ex.scaling_exp);
    let b = ex.boundary_exp.min(1.0);
    let mut u = grid.from_fn(|r| amp * (1.0 - r.powf(p / (p - 1.0))).max(0.0).powf(b));
    let m = grid.m();
    u.values_mut()[m] = 0.0;
    u
}

fn check_boundary_layer(u: &Field, params: &ProblemParams) -> Result<()> {
    let ex = derived_exponents(params);
    let b = ex.boundary_exp;
    if !params.reg.is_limit() || b >= 1.0 {
        return Ok(());
    }
    // half-line profile C d^b solves -(Φp(u'))' = λ u^-δ exactly
    let p = params.p;
    let c = (params.lambda / (b.powf(p - 1.0) * (1.0 - b) * (p - 1.0))).powf(ex.scaling_exp);
    let g = u.grid();
    let node = g.m() - 1;
    let predicted = c * (1.0 - g.nodes()[node]).powf(b);
    let value = u.values()[node];
    if value > 10.0 * predicted {
        return Err(Error::MeshTooCoarseNearBoundary {
            node,
            value,
            predicted,
        });
    }
    Ok(())
}

fn check_bracket(u: &Field, bracket: &Option<(Field, Field)>) -> Result<()> {
    if let Some((lo, hi)) = bracket {
        for (node, ((v, l), h)) in u.values().iter().zip(lo.values()).zip(hi.values()).enumerate() {
            let amount = (l - v).max(v - h);
            if amount > 1e-10 * (1.0 + v.abs()) {
                return Err(Error::BracketViolated { node, amount });
            }
        }
    }
    Ok(())
}

pub fn solve_pure_singular(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    tol: f64,
) -> Result<SolveResult> {
    solve_pure_singular_with(grid, params, &SingularOptions::new(tol))
}

pub fn solve_pure_singular_with(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    opts: &SingularOptions,
) -> Result<SolveResult> {
    if !(params.lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pure singular problem needs lambda > 0, got {}",
            params.lambda
        )));
    }
    let nl = Nonlinearity::pure_singular(params);
    let seed = match &opts.seed {
        Some(s) => s.clone(),
        None => default_seed(grid, params),
    };
    let bracket = opts.bracket.as_ref().map(|(a, b)| (a, b));
    let (u, iterations, residual) = match opts.method {
        SingularMethod::Newton => {
            let nopts = NewtonOptions {
                tol: opts.tol,
                max_iter: opts.max_iter,
                ..NewtonOptions::default()
            };
            let out = damped_newton(&seed, &nl, params.p, &nopts, bracket)?;
            (out.u, out.iterations, out.residual)
        }
        SingularMethod::Picard => picard(&seed, &nl, params.p, opts)?,
    };
    check_bracket(&u, &opts.bracket)?;
    check_boundary_layer(&u, params)?;
    Ok(SolveResult {
        u,
        residual_sup: residual,
        iterations,
        bracket: opts.bracket.clone(),
    })
}

fn picard(
    seed: &Field,
    nl: &Nonlinearity,
    p: f64,
    opts: &SingularOptions,
) -> Result<(Field, usize, f64)> {
    if nl.shift == 0.0 {
        return Err(Error::InvalidArgument(
            "Picard iteration needs a finite regularization index".into(),
        ));
    }
    let m = seed.grid().m();
    let mut v = seed.clone();
    let mut theta = 0.5f64;
    let mut prev = f64::INFINITY;
    for it in 0..opts.max_iter {
        let res = residual_unchecked(&v, nl, p);
        let rel = relative_residual(&v, &res, nl, p);
        if rel <= opts.tol {
            return Ok((v, it, rel));
        }
        if rel > prev {
            theta = (0.5 * theta).max(1e-3);
        }
        prev = rel;
        let s = invert_by_flux(&nl.source_field(&v), p);
        for (x, y) in v.values_mut().iter_mut().zip(s.values()) {
            *x = (1.0 - theta) * *x + theta * y;
        }
        if let Some((lo, hi)) = &opts.bracket {
            for ((x, l), h) in v.values_mut().iter_mut().zip(lo.values()).zip(hi.values()) {
                *x = x.clamp(*l, h.max(*l));
            }
        }
        v.values_mut()[m] = 0.0;
    }
    let res = residual_unchecked(&v, nl, p);
    Err(Error::NoConvergence {
        solver: "pure singular (picard)",
        iterations: opts.max_iter,
        last: relative_residual(&v, &res, nl, p),
    })
}

type CacheKey = (usize, u64, u64, usize, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn key(grid: &RadialGrid, p: f64, delta: f64) -> CacheKey {
    (grid.dim(), p.to_bits(), delta.to_bits(), grid.m(), grid.grading().to_bits())
}

pub fn calibration_cache_get(grid: &RadialGrid, p: f64, delta: f64) -> Option<f64> {
    cache().lock().expect("calibration cache poisoned").get(&key(grid, p, delta)).copied()
}

/// Stores `t` unless a value is already present; returns the stored value.
pub fn calibration_cache_insert(grid: &RadialGrid, p: f64, delta: f64, t: f64) -> f64 {
    *cache()
        .lock()
        .expect("calibration cache poisoned")
        .entry(key(grid, p, delta))
        .or_insert(t)
}

/// `T = ‖v‖∞` for the `λ = 1` limit solution, so that `‖v_λ‖∞ = T λ^(1/(δ+p-1))`.
pub fn calibrate_t(grid: &Arc<RadialGrid>, p: f64, delta: f64, tol: f64) -> Result<f64> {
    if let Some(t) = calibration_cache_get(grid, p, delta) {
        return Ok(t);
    }
    let params = ProblemParams::new(grid.dim(), p, p, delta, 1.0, RegIndex::Limit);
    let sol = solve_pure_singular(grid, &params, tol)?;
    Ok(calibration_cache_insert(grid, p, delta, sol.u.sup_norm()))
}

/// Which equation the ladder solves at each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderProblem {
    PureSingular,
    /// The lower (minimal) branch of the full problem, continued in `n`.
    FullLowerBranch,
}

pub fn regularization_ladder(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    n_list: &[u64],
    problem: LadderProblem,
    tol: f64,
) -> Result<LadderResult> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty ladder".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "ladder indices must be positive and strictly ascending".into(),
        ));
    }
    let mut entries: Vec<(u64, Field)> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let pn = params.with_reg(RegIndex::Finite(n));
        let tag = |e: Error| Error::Ladder {
            n,
            source: Box::new(e),
        };
        let prev = entries.last().map(|(_, u)| u.clone());
        let u = match problem {
            LadderProblem::PureSingular => {
                let mut opts = SingularOptions::new(tol);
                opts.seed = prev;
                solve_pure_singular_with(grid, &pn, &opts).map_err(tag)?.u
            }
            LadderProblem::FullLowerBranch => {
                // pure singular solution lies below the minimal solution
                let seed = match prev {
                    Some(u) => u,
                    None => solve_pure_singular(grid, &pn, tol).map_err(tag)?.u,
                };
                super::full::solve_full(grid, &pn, &seed, &[], tol)
                    .map_err(tag)?
                    .u
            }
        };
        entries.push((n, u));
    }
    Ok(LadderResult::from_entries(entries))
}
