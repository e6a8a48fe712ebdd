//! Inverse p-Laplacian: the unique minimiser of `(1/p)∫|∇w|^p - ∫ rhs·w`.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::plap::{energy, energy_gradient, phi_p_inv};
use crate::tridiag::Tridiagonal;

/// How [`invert_plap_with`] finds the minimiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Inversion {
    /// Exact solution of the discrete Euler–Lagrange equations. In the radial
    /// setting these telescope: the flux through cell `i` equals minus the
    /// load accumulated on nodes `0..=i`, so slopes follow pointwise.
    #[default]
    FluxSummation,
    /// Nonlinear conjugate gradients on the energy, preconditioned by the
    /// `p = 2` stiffness matrix.
    ConjugateGradient,
}

fn check_rhs(rhs: &Field) -> Result<()> {
    let m = rhs.grid().m();
    match rhs.values()[..m]
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
    {
        Some((node, &value)) => Err(Error::NegativeRhs { node, value }),
        None => Ok(()),
    }
}

/// Solves `-Δp w = rhs`, `w(1) = 0`. `rhs` must be nonnegative.
pub fn invert_plap(rhs: &Field, p: f64, tol: f64) -> Result<Field> {
    invert_plap_with(rhs, p, tol, Inversion::FluxSummation)
}

pub fn invert_plap_with(rhs: &Field, p: f64, tol: f64, method: Inversion) -> Result<Field> {
    check_rhs(rhs)?;
    match method {
        Inversion::FluxSummation => Ok(invert_by_flux(rhs, p)),
        Inversion::ConjugateGradient => minimize_ncg(rhs, p, tol),
    }
}

/// No sign check: the flux formula is valid for any load.
pub(crate) fn invert_by_flux(rhs: &Field, p: f64) -> Field {
    let g = rhs.grid();
    let m = g.m();
    let geo = g.geometry(p);
    let w = &geo.weights;
    let mut slopes = vec![0.0; m];
    // Neumaier-compensated running load
    let (mut load, mut comp) = (0.0f64, 0.0f64);
    for i in 0..m {
        let x = w[i] * rhs.values()[i];
        let t = load + x;
        if load.abs() >= x.abs() {
            comp += (load - t) + x;
        } else {
            comp += (x - t) + load;
        }
        load = t;
        slopes[i] = phi_p_inv(-(load + comp) / geo.faces[i], p);
    }
    let mut u = vec![0.0; m + 1];
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for i in (0..m).rev() {
        let x = -slopes[i] * g.widths()[i];
        let t = acc + x;
        if acc.abs() >= x.abs() {
            comp += (acc - t) + x;
        } else {
            comp += (x - t) + acc;
        }
        acc = t;
        u[i] = acc + comp;
    }
    Field::new(g.clone(), u)
}

fn laplacian_stiffness(u: &Field, p: f64) -> Tridiagonal {
    let g = u.grid();
    let m = g.m();
    let k: Vec<f64> = g.geometry(p).faces.iter().zip(g.widths()).map(|(a, h)| a / h).collect();
    let mut t = Tridiagonal::zeros(m);
    for i in 0..m {
        t.diag[i] = k[i] + if i > 0 { k[i - 1] } else { 0.0 };
        if i + 1 < m {
            t.upper[i] = -k[i];
            t.lower[i] = -k[i];
        }
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shifted(u: &Field, dir: &[f64], alpha: f64) -> Field {
    let mut v = u.clone();
    for (x, d) in v.values_mut().iter_mut().zip(dir) {
        *x += alpha * d;
    }
    v
}

/// Preconditioned Polak–Ribière+ with a bracketing line search on the
/// directional derivative (the energy is convex along every line).
fn minimize_ncg(rhs: &Field, p: f64, tol: f64) -> Result<Field> {
    let g = rhs.grid();
    let m = g.m();
    let precond = laplacian_stiffness(rhs, p);
    let geo = g.geometry(p);
    let w = &geo.weights[..m];
    let scale = 1.0 + rhs.sup_norm();
    let stationarity = |grad: &[f64]| {
        grad.iter()
            .zip(w)
            .fold(0.0f64, |acc, (gi, wi)| acc.max((gi / wi).abs()))
            / scale
    };

    let mut u = g.zeros();
    let mut grad = energy_gradient(&u, rhs, p);
    let mut z = precond.solve(&grad).expect("laplacian is nonsingular");
    let mut dir: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut alpha = 1.0f64;
    let max_iter = 20 * m + 200;
    for it in 0..max_iter {
        let st = stationarity(&grad);
        if st <= tol {
            return Ok(u);
        }
        let slope0 = dot(&grad, &dir);
        if slope0 >= 0.0 {
            // lost descent: restart along the preconditioned gradient
            dir = z.iter().map(|v| -v).collect();
        }
        let deriv = |a: f64| dot(&energy_gradient(&shifted(&u, &dir, a), rhs, p), &dir);
        let d0 = deriv(0.0);
        // bracket the root of the directional derivative
        let mut hi = alpha.max(1e-12);
        let mut dhi = deriv(hi);
        let mut lo = 0.0;
        let mut dlo = d0;
        let mut guard = 0;
        while dhi < 0.0 && guard < 200 {
            lo = hi;
            dlo = dhi;
            hi *= 2.0;
            dhi = deriv(hi);
            guard += 1;
        }
        // Illinois false position: stop once |φ'| ≤ 0.1 |φ'(0)|
        let mut a = hi;
        let mut da = dhi;
        let mut side = 0i32;
        for _ in 0..100 {
            if da.abs() <= 0.1 * d0.abs() {
                break;
            }
            a = (lo * dhi - hi * dlo) / (dhi - dlo);
            if !a.is_finite() || a <= lo || a >= hi {
                a = 0.5 * (lo + hi);
            }
            da = deriv(a);
            if da < 0.0 {
                lo = a;
                dlo = da;
                if side == -1 {
                    dhi *= 0.5;
                }
                side = -1;
            } else {
                hi = a;
                dhi = da;
                if side == 1 {
                    dlo *= 0.5;
                }
                side = 1;
            }
        }
        let e_old = energy(&u, rhs, p);
        let trial = shifted(&u, &dir, a);
        if energy(&trial, rhs, p) > e_old + 1e-14 * e_old.abs() {
            return Err(Error::NoConvergence {
                solver: "invert_plap (conjugate gradient)",
                iterations: it,
                last: st,
            });
        }
        alpha = a;
        u = trial;
        let new_grad = energy_gradient(&u, rhs, p);
        let new_z = precond.solve(&new_grad).expect("laplacian is nonsingular");
        let num: f64 = new_grad
            .iter()
            .zip(&grad)
            .zip(&new_z)
            .map(|((gn, go), zn)| (gn - go) * zn)
            .sum();
        let beta = (num / dot(&grad, &z)).max(0.0);
        for (d, zn) in dir.iter_mut().zip(&new_z) {
            *d = -zn + beta * *d;
        }
        grad = new_grad;
        z = new_z;
    }
    Err(Error::NoConvergence {
        solver: "invert_plap (conjugate gradient)",
        iterations: max_iter,
        last: stationarity(&grad),
    })
}
