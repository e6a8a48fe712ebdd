//! First Dirichlet eigenpair of `-Δp` on the ball.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::plap::{apply_plap, phi_p};
use crate::solve::invert_plap;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Normalized to sup-norm 1.
    pub phi1: Field,
}

/// Summary written alongside eigenfunction artifacts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl EigenPair {
    /// `sup |-Δp φ₁ - λ₁ φ₁^(p-1)|` over the interior.
    pub fn residual(&self, p: f64) -> f64 {
        let a = apply_plap(&self.phi1, p);
        let m = self.phi1.grid().m();
        (0..m)
            .map(|i| (a.values()[i] - self.lambda1 * phi_p(self.phi1.values()[i], p)).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫|∇u|^p / ∫|u|^p`.
pub fn rayleigh(u: &Field, p: f64) -> Result<f64> {
    let geo = u.grid().geometry(p);
    let den = geo.integrate(&u.map(|v| v.abs().powf(p)));
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(geo.seminorm(u, p) / den)
}

const MAX_ITER: usize = 20_000;

pub fn first_eigenpair(grid: &Arc<RadialGrid>, p: f64) -> Result<EigenPair> {
    first_eigenpair_from(&grid.from_fn(|r| 1.0 - r * r), p)
}

/// Inverse power iteration `φ ← (-Δp)⁻¹(R(φ) φ^(p-1))`, renormalized to
/// sup-norm 1, until the Rayleigh quotient is stationary to 1e-10 and the
/// iterates to 1e-10 in sup-norm.
pub fn first_eigenpair_from(seed: &Field, p: f64) -> Result<EigenPair> {
    let m = seed.grid().m();
    let mut phi = seed.map(f64::abs);
    phi.values_mut()[m] = 0.0;
    let s = phi.sup_norm();
    if s == 0.0 {
        return Err(Error::ZeroField);
    }
    phi = phi.scaled(1.0 / s);
    let mut ray = rayleigh(&phi, p)?;
    for _ in 0..MAX_ITER {
        let rhs = phi.map(|v| ray * v.max(0.0).powf(p - 1.0));
        let next = invert_plap(&rhs, p, 1e-12)?;
        let next = next.scaled(1.0 / next.sup_norm());
        let next_ray = rayleigh(&next, p)?;
        let moved = next.sup_distance(&phi);
        let stationary = (next_ray - ray).abs() <= 1e-10 * next_ray;
        phi = next;
        ray = next_ray;
        if stationary && moved <= 1e-10 {
            return Ok(EigenPair {
                lambda1: ray,
                phi1: phi,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "first_eigenpair",
        iterations: MAX_ITER,
        last: ray,
    })
}
