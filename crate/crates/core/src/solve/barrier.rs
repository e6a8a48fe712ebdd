//! Sub- and super-solutions of the full problem, and the radius below which
//! small solutions are unique.

use std::sync::Arc;

use super::singular::{calibrate_t, solve_pure_singular};
use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::params::{derived_exponents, ProblemParams, RegIndex};
use crate::plap::{fluxes, residual_unchecked, Nonlinearity};

/// Per-node magnitude of the terms balanced by the residual.
fn balance_scale(u: &Field, nl: &Nonlinearity, p: f64) -> Vec<f64> {
    let g = u.grid();
    let f = fluxes(u, p);
    let geo = g.geometry(p);
    (0..g.m())
        .map(|i| {
            let left = if i == 0 { 0.0 } else { f[i - 1].abs() };
            nl.source(u.values()[i]).abs() + (left + f[i].abs()) / geo.weights[i]
        })
        .collect()
}

const CERT_TOL: f64 = 1e-8;

/// `(cφ₁)^b` at the limit and `(cφ₁ + n^(-1/b))^b - 1/n` for finite `n`,
/// `b = p/(δ+p-1)`. Certified against the pure singular residual, which
/// makes it a sub-solution of the full problem as well.
pub fn sub_solution(params: &ProblemParams, eigen: &EigenPair, c: f64) -> Result<Field> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("sub-solution needs c > 0, got {c}")));
    }
    let b = derived_exponents(params).boundary_exp;
    let shift = params.reg.shift();
    let eps = if shift == 0.0 { 0.0 } else { shift.powf(1.0 / b) };
    let mut u = eigen.phi1.map(|v| (c * v.max(0.0) + eps).powf(b) - shift);
    let m = u.grid().m();
    u.values_mut()[m] = 0.0;
    let nl = Nonlinearity::pure_singular(params);
    let res = residual_unchecked(&u, &nl, params.p);
    let scale = balance_scale(&u, &nl, params.p);
    for node in 0..m {
        let residual = res.values()[node];
        if !(residual <= CERT_TOL * scale[node]) {
            return Err(Error::NotSubSolution { node, residual });
        }
    }
    Ok(u)
}

/// Largest `c` (to 1e-6 relative) for which [`sub_solution`] certifies.
pub fn largest_sub_coefficient(params: &ProblemParams, eigen: &EigenPair) -> Result<f64> {
    let ok = |c: f64| sub_solution(params, eigen, c).is_ok();
    let mut lo = 1e-3;
    while !ok(lo) {
        lo *= 0.5;
        if lo < 1e-14 {
            return Err(Error::NotSubSolution {
                node: 0,
                residual: f64::NAN,
            });
        }
    }
    let mut hi = 2.0 * lo;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(lo);
        }
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Constants entering the super-solution construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConstants {
    pub t: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub mu: f64,
    pub lambda_star: f64,
}

fn a_of(s: f64, t: f64, params: &ProblemParams) -> f64 {
    let k = params.delta + params.p - 1.0;
    0.5 * ((s / t).powf(k) - s.powf(params.delta + params.q))
}

/// Smallest `μ ∈ (0, δ₂)` with `A(μ) = λ₀`, where
/// `A(s) = ½((s/T)^(δ+p-1) - s^(δ+q))` and `δ₂ = min(δ₀, δ₁)`.
pub fn mu_root(params: &ProblemParams, t: f64, delta0: f64, lambda0: f64) -> Result<BarrierConstants> {
    let (p, q, d) = (params.p, params.q, params.delta);
    let k = d + p - 1.0;
    let e = p - q - 1.0;
    let delta1 = 0.5 * (2.0 * q - 2.0 * p + 3.0).powf(1.0 / e) * t.powf(k / e);
    let delta2 = delta0.min(delta1);
    // A increases up to its critical point
    let crit = (k / ((d + q) * t.powf(k))).powf(1.0 / (q - p + 1.0));
    let peak = crit.min(delta2);
    let max_a = a_of(peak, t, params);
    if !(max_a >= lambda0) || !(lambda0 > 0.0) {
        return Err(Error::NoSuchMu {
            lambda0,
            delta2,
            max_a,
        });
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if a_of(mid, t, params) < lambda0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mu = hi;
    Ok(BarrierConstants {
        t,
        delta0,
        delta1,
        delta2,
        mu,
        lambda_star: (mu / t).powf(k),
    })
}

/// The pure singular solution at the boosted parameter `λ*`, certified as a
/// super-solution of the full problem at `λ₀ = params.lambda`.
pub fn super_solution(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    delta0: f64,
    tol: f64,
) -> Result<(Field, BarrierConstants)> {
    let t = calibrate_t(grid, params.p, params.delta, tol)?;
    super_solution_with(grid, params, t, delta0, tol)
}

pub fn super_solution_with(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    t: f64,
    delta0: f64,
    tol: f64,
) -> Result<(Field, BarrierConstants)> {
    let consts = mu_root(params, t, delta0, params.lambda)?;
    let boosted = params.with_lambda(consts.lambda_star);
    let w = solve_pure_singular(grid, &boosted, tol)?.u;
    let nl = Nonlinearity::full(params);
    let res = residual_unchecked(&w, &nl, params.p);
    let scale = balance_scale(&w, &nl, params.p);
    for node in 0..grid.m() {
        let residual = res.values()[node];
        if !(residual >= -CERT_TOL * scale[node]) {
            return Err(Error::NotSuperSolution { node, residual });
        }
    }
    Ok((w, consts))
}

/// `M_n(λ)`: the quotient `(λ f_n(s) + s^q) / s^(p-1)` is strictly decreasing
/// on `(0, M_n)`, so two solutions with sup-norm below `M_n` coincide.
/// The root of `(q-p+1) s^q (s+1/n)^(1+δ) = λ((δ+p-1) s + (p-1)/n)`.
pub fn uniqueness_radius(params: &ProblemParams) -> f64 {
    let (p, q, d, lam) = (params.p, params.q, params.delta, params.lambda);
    if lam <= 0.0 {
        return 0.0;
    }
    let eps = params.reg.shift();
    if matches!(params.reg, RegIndex::Limit) {
        return (lam * (d + p - 1.0) / (q - p + 1.0)).powf(1.0 / (q + d));
    }
    let f = |s: f64| (q - p + 1.0) * s.powf(q) * (s + eps).powf(1.0 + d) - lam * ((d + p - 1.0) * s + (p - 1.0) * eps);
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
