//! Damped Newton for the discrete radial problem, with optional deflation.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::plap::{
    fluxes, linearize_unchecked, relative_residual, residual_unchecked, Nonlinearity,
    OperatorConfig, POSITIVITY_FLOOR,
};

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Target for the relative residual (see [`relative_residual`]).
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest accepted line-search step.
    pub min_step: f64,
    /// Known solutions to deflate; the result keeps sup-distance >= `distinct` from each.
    pub deflated: Vec<Field>,
    pub distinct: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            min_step: 1e-9,
            deflated: Vec::new(),
            distinct: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub u: Field,
    pub iterations: usize,
    pub residual: f64,
}

fn weighted_sq_dist(u: &Field, v: &Field) -> f64 {
    u.values()
        .iter()
        .zip(v.values())
        .zip(u.grid().weights())
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum()
}

/// Deflation factor `Π_k (1/‖u-u_k‖² + 1)`.
fn deflation(u: &Field, known: &[Field]) -> f64 {
    known
        .iter()
        .map(|k| 1.0 / weighted_sq_dist(u, k) + 1.0)
        .product()
}

/// Per-node scale frozen at the current iterate for the merit function.
fn merit_scale(u: &Field, nl: &Nonlinearity, p: f64) -> Vec<f64> {
    let g = u.grid();
    let m = g.m();
    let f = fluxes(u, p);
    let geo = g.geometry(p);
    let w = &geo.weights;
    (0..m)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { f[i - 1].abs() };
            let s = nl.source(u.values()[i]).abs() + (left + f[i].abs()) / w[i];
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

fn merit(res: &Field, scale: &[f64]) -> f64 {
    res.values()
        .iter()
        .zip(scale)
        .map(|(r, s)| (r / s) * (r / s))
        .sum::<f64>()
        .sqrt()
}

fn clip(u: &mut Field, nl: &Nonlinearity) {
    let m = u.grid().m();
    let floor = if nl.shift == 0.0 { POSITIVITY_FLOOR } else { 0.0 };
    let vals = u.values_mut();
    for v in vals[..m].iter_mut() {
        if !(*v > floor) {
            *v = floor;
        }
    }
    vals[m] = 0.0;
}

fn project(u: &mut Field, bracket: Option<(&Field, &Field)>) {
    if let Some((lo, hi)) = bracket {
        for ((v, l), h) in u.values_mut().iter_mut().zip(lo.values()).zip(hi.values()) {
            *v = v.clamp(*l, h.max(*l));
        }
    }
}

pub(crate) fn damped_newton(
    seed: &Field,
    nl: &Nonlinearity,
    p: f64,
    opts: &NewtonOptions,
    bracket: Option<(&Field, &Field)>,
) -> Result<NewtonOutcome> {
    let m = seed.grid().m();
    let mut u = seed.clone();
    clip(&mut u, nl);
    project(&mut u, bracket);
    let mut res = residual_unchecked(&u, nl, p);
    let mut rel = relative_residual(&u, &res, nl, p);
    for it in 0..opts.max_iter {
        if rel <= opts.tol {
            for k in &opts.deflated {
                let distance = u.sup_distance(k);
                if distance < opts.distinct {
                    return Err(Error::ConvergedToDeflated { distance });
                }
            }
            return Ok(NewtonOutcome {
                u,
                iterations: it,
                residual: rel,
            });
        }
        let lin = linearize_unchecked(&u, nl, &OperatorConfig::scaled_to(&u, p));
        let rhs: Vec<f64> = res.values()[..m].iter().map(|r| -r).collect();
        let Some(mut step) = lin.solve(&rhs) else {
            return Err(Error::NoConvergence {
                solver: "newton (singular jacobian)",
                iterations: it,
                last: rel,
            });
        };
        if !opts.deflated.is_empty() {
            // Newton step for η(u)·R(u) is τ·step with τ = 1/(1 - ∇log η · step)
            let mut dlog = 0.0;
            for k in &opts.deflated {
                let d2 = weighted_sq_dist(&u, k);
                let proj: f64 = (0..m)
                    .map(|i| u.grid().weights()[i] * (u.values()[i] - k.values()[i]) * step[i])
                    .sum();
                dlog += -2.0 * proj / (d2 * d2 + d2);
            }
            let tau = 1.0 / (1.0 - dlog);
            if tau.is_finite() {
                step.iter_mut().for_each(|s| *s *= tau);
            }
        }
        let scale = merit_scale(&u, nl, p);
        let eta0 = deflation(&u, &opts.deflated);
        let m0 = eta0 * merit(&res, &scale);
        let mut t = 1.0;
        let accepted = loop {
            let mut trial = u.clone();
            for (v, s) in trial.values_mut()[..m].iter_mut().zip(&step) {
                *v += t * s;
            }
            clip(&mut trial, nl);
            project(&mut trial, bracket);
            let tres = residual_unchecked(&trial, nl, p);
            let mt = deflation(&trial, &opts.deflated) * merit(&tres, &scale);
            if mt.is_finite() && mt < (1.0 - 1e-4 * t) * m0 {
                break Some((trial, tres));
            }
            t *= 0.5;
            if t < opts.min_step {
                break None;
            }
        };
        match accepted {
            Some((trial, tres)) => {
                u = trial;
                res = tres;
                rel = relative_residual(&u, &res, nl, p);
            }
            None => {
                return Err(Error::NoConvergence {
                    solver: "newton (line search)",
                    iterations: it,
                    last: rel,
                })
            }
        }
    }
    if rel <= opts.tol {
        return Ok(NewtonOutcome {
            u,
            iterations: opts.max_iter,
            residual: rel,
        });
    }
    Err(Error::NoConvergence {
        solver: "newton",
        iterations: opts.max_iter,
        last: rel,
    })
}
