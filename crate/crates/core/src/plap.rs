//! Discrete radial p-Laplacian.
//!
//! The operator is defined as the exact gradient of the discrete energy
//! `(1/p) Σ_c a_c h_c |d_c|^p`, divided by the nodal quadrature weights:
//!
//! ```text
//! (-Δp u)_i = (F_{i-1} - F_i) / w_i,    F_c = a_c |d_c|^(p-2) d_c,
//! ```
//!
//! with `d_c` the slope on cell `c`, `a_c = ω r_c^(N-1)` the face area at the
//! cell midpoint and `F_{-1} = 0` (zero flux through the centre). Node `m`
//! carries the Dirichlet value and is never an unknown.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::ProblemParams;
use crate::tridiag::Tridiagonal;

/// Floor applied to `u` before evaluating `u^-δ` in the limit problem.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

#[inline]
pub(crate) fn phi_p(d: f64, p: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.abs().powf(p - 2.0) * d
    }
}

/// Inverse of `t ↦ |t|^(p-2) t`.
#[inline]
pub(crate) fn phi_p_inv(y: f64, p: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y.signum() * y.abs().powf(1.0 / (p - 1.0))
    }
}

/// Regularization of the diffusion coefficient used by [`linearize`] only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConfig {
    pub p: f64,
    /// `|u'|^(p-2)` becomes `(u'^2 + eps^2)^((p-2)/2)` in the Jacobian.
    pub eps_degenerate: f64,
}

impl OperatorConfig {
    pub fn new(p: f64, eps_degenerate: f64) -> Self {
        Self { p, eps_degenerate }
    }

    /// `eps = 1e-8 · max |u'|`.
    pub fn scaled_to(u: &Field, p: f64) -> Self {
        let scale = u.slopes().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        Self::new(p, 1e-8 * scale.max(f64::MIN_POSITIVE))
    }
}

/// Right-hand side `s(u) = λ f(u) + u^q` of the radial problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub lambda: f64,
    pub delta: f64,
    /// `1/n`, or 0 for the singular limit.
    pub shift: f64,
    /// Power term exponent; `None` for the pure singular problem.
    pub q: Option<f64>,
}

impl Nonlinearity {
    /// `λ (u + 1/n)^-δ + u^q`
    pub fn full(params: &ProblemParams) -> Self {
        Self {
            lambda: params.lambda,
            delta: params.delta,
            shift: params.reg.shift(),
            q: Some(params.q),
        }
    }

    /// `λ (u + 1/n)^-δ`
    pub fn pure_singular(params: &ProblemParams) -> Self {
        Self {
            q: None,
            ..Self::full(params)
        }
    }

    pub fn is_singular_limit(&self) -> bool {
        self.shift == 0.0 && self.lambda > 0.0
    }

    #[inline]
    fn base(&self, u: f64) -> f64 {
        if self.shift == 0.0 {
            u.max(POSITIVITY_FLOOR)
        } else {
            u.max(0.0) + self.shift
        }
    }

    /// `λ f(u)`
    #[inline]
    pub fn singular(&self, u: f64) -> f64 {
        if self.lambda == 0.0 {
            0.0
        } else {
            self.lambda * self.base(u).powf(-self.delta)
        }
    }

    #[inline]
    pub fn power(&self, u: f64) -> f64 {
        match self.q {
            Some(q) => u.max(0.0).powf(q),
            None => 0.0,
        }
    }

    #[inline]
    pub fn source(&self, u: f64) -> f64 {
        self.singular(u) + self.power(u)
    }

    /// `ds/du`
    #[inline]
    pub fn source_derivative(&self, u: f64) -> f64 {
        let sing = if self.lambda == 0.0 {
            0.0
        } else {
            -self.lambda * self.delta * self.base(u).powf(-self.delta - 1.0)
        };
        let pow = match self.q {
            Some(q) if u > 0.0 => q * u.max(POSITIVITY_FLOOR).powf(q - 1.0),
            _ => 0.0,
        };
        sing + pow
    }

    /// A primitive `S(u)` with `S' = s`, used by the energy of the problem.
    pub fn primitive(&self, u: f64) -> f64 {
        let sing = if self.lambda == 0.0 {
            0.0
        } else {
            let b = self.base(u);
            if (self.delta - 1.0).abs() < 1e-14 {
                self.lambda * b.ln()
            } else {
                self.lambda * b.powf(1.0 - self.delta) / (1.0 - self.delta)
            }
        };
        let pow = match self.q {
            Some(q) => u.max(0.0).powf(q + 1.0) / (q + 1.0),
            None => 0.0,
        };
        sing + pow
    }

    /// `s(u)` nodewise; the boundary node gets 0.
    pub fn source_field(&self, u: &Field) -> Field {
        let m = u.grid().m();
        let mut s = u.map(|v| self.source(v));
        s.values_mut()[m] = 0.0;
        s
    }
}

/// Cell fluxes `F_c = a_c Φ_p(d_c)`.
pub fn fluxes(u: &Field, p: f64) -> Vec<f64> {
    u.slopes()
        .iter()
        .zip(&u.grid().geometry(p).faces)
        .map(|(&d, &a)| a * phi_p(d, p))
        .collect()
}

/// `-Δp u` at the nodes; value at the boundary node is 0.
pub fn apply_plap(u: &Field, p: f64) -> Field {
    let g = u.grid();
    let m = g.m();
    let f = fluxes(u, p);
    let geo = g.geometry(p);
    let w = &geo.weights;
    let mut out = vec![0.0; m + 1];
    for i in 0..m {
        let left = if i == 0 { 0.0 } else { f[i - 1] };
        out[i] = (left - f[i]) / w[i];
    }
    Field::new(g.clone(), out)
}

/// `(1/p)∫|∇u|^p - ∫ rhs·u`.
pub fn energy(u: &Field, rhs: &Field, p: f64) -> f64 {
    let ru = rhs
        .zip_map(u, |a, b| a * b)
        .expect("energy: rhs and u on different grids");
    let geo = u.grid().geometry(p);
    geo.seminorm(u, p) / p - geo.integrate(&ru)
}

/// Gradient of [`energy`] with respect to the interior nodal values.
pub fn energy_gradient(u: &Field, rhs: &Field, p: f64) -> Vec<f64> {
    let a = apply_plap(u, p);
    let geo = u.grid().geometry(p);
    let w = &geo.weights;
    (0..u.grid().m())
        .map(|i| w[i] * (a.values()[i] - rhs.values()[i]))
        .collect()
}

fn check_positive(u: &Field, nl: &Nonlinearity) -> Result<()> {
    if nl.is_singular_limit() {
        let m = u.grid().m();
        if let Some((node, &value)) = u.values()[..m].iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonpositiveInterior { node, value });
        }
    }
    Ok(())
}

/// `-Δp u - s(u)` at the nodes for a given nonlinearity; boundary entry 0.
pub fn residual_with(u: &Field, nl: &Nonlinearity, p: f64) -> Result<Field> {
    check_positive(u, nl)?;
    Ok(residual_unchecked(u, nl, p))
}

pub(crate) fn residual_unchecked(u: &Field, nl: &Nonlinearity, p: f64) -> Field {
    let m = u.grid().m();
    let mut r = apply_plap(u, p);
    for (i, (ri, &ui)) in r.values_mut().iter_mut().zip(u.values()).enumerate() {
        if i < m {
            *ri -= nl.source(ui);
        }
    }
    r
}

/// Residual of `-Δp u = λ f_n(u) + u^q`.
pub fn residual(u: &Field, params: &ProblemParams) -> Result<Field> {
    residual_with(u, &Nonlinearity::full(params), params.p)
}

/// Residual of the pure singular problem `-Δp u = λ f_n(u)`.
pub fn residual_pure_singular(u: &Field, params: &ProblemParams) -> Result<Field> {
    residual_with(u, &Nonlinearity::pure_singular(params), params.p)
}

/// Nodewise relative residual `|R_i| / (|s_i| + (|F_{i-1}| + |F_i|)/w_i)`,
/// maximised over the interior. This is the backward error of the discrete
/// equations: the size of the residual relative to the terms it balances.
///
/// Residual within the rounding noise of the nodal values is not counted. On
/// graded meshes the innermost cells resolve differences of `u` only to a few
/// digits, so the bare ratio has a floor well above machine precision there.
pub fn relative_residual(u: &Field, residual: &Field, nl: &Nonlinearity, p: f64) -> f64 {
    let g = u.grid();
    let m = g.m();
    let f = fluxes(u, p);
    let noise = rounding_noise(u, p);
    let geo = g.geometry(p);
    let w = &geo.weights;
    let mut worst = 0.0f64;
    for i in 0..m {
        let left = if i == 0 { 0.0 } else { f[i - 1].abs() };
        let scale = nl.source(u.values()[i]).abs() + (left + f[i].abs()) / w[i];
        let left_noise = if i == 0 { 0.0 } else { noise[i - 1] };
        let r = (residual.values()[i].abs() - NOISE_FACTOR * (left_noise + noise[i]) / w[i]).max(0.0);
        let rel = if scale > 0.0 { r / scale } else { r };
        if !rel.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(rel);
    }
    worst
}

const NOISE_FACTOR: f64 = 4.0;

/// Flux change per cell when both end values move by one ulp.
fn rounding_noise(u: &Field, p: f64) -> Vec<f64> {
    let v = u.values();
    u.slopes()
        .iter()
        .enumerate()
        .zip(&u.grid().geometry(p).faces)
        .map(|((c, &d), &a)| {
            let jitter = f64::EPSILON * (v[c].abs() + v[c + 1].abs()) / u.grid().widths()[c];
            a * (phi_p(d.abs() + jitter, p) - phi_p(d.abs(), p))
        })
        .collect()
}

/// Jacobian of the residual, stored as `J = W⁻¹ K + diag(reaction)` with `K`
/// the symmetric stiffness matrix and `W` the nodal weights.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub stiffness: Tridiagonal,
    pub reaction: Vec<f64>,
    pub weights: Vec<f64>,
    pub p: f64,
}

impl Linearization {
    /// `J v` for `v` over the interior unknowns.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let kv = self.stiffness.mul_vec(v);
        kv.iter()
            .zip(&self.weights)
            .zip(self.reaction.iter().zip(v))
            .map(|((k, w), (c, x))| k / w + c * x)
            .collect()
    }

    /// Symmetric form `W J = K + W diag(reaction)`.
    pub fn symmetric_form(&self) -> Tridiagonal {
        let mut a = self.stiffness.clone();
        for (i, d) in a.diag.iter_mut().enumerate() {
            *d += self.weights[i] * self.reaction[i];
        }
        a
    }

    /// Solves `J x = b`.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let wb: Vec<f64> = b.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        self.symmetric_form().solve(&wb)
    }

    /// Diffusion coefficients `(p-1)(d^2+eps^2)^((p-2)/2)` per cell, recovered from `K`.
    pub fn diffusion(&self, u: &Field) -> Vec<f64> {
        let g = u.grid();
        let m = g.m();
        let off = &self.stiffness.upper;
        (0..m)
            .map(|c| {
                let k = if c + 1 < m {
                    -off[c]
                } else {
                    // last cell only touches the diagonal of node m-1
                    self.stiffness.diag[m - 1] - if m >= 2 { -off[m - 2] } else { 0.0 }
                };
                k * g.widths()[c] / g.geometry(self.p).faces[c]
            })
            .collect()
    }
}

pub fn linearize_with(u: &Field, nl: &Nonlinearity, cfg: &OperatorConfig) -> Result<Linearization> {
    check_positive(u, nl)?;
    Ok(linearize_unchecked(u, nl, cfg))
}

pub(crate) fn linearize_unchecked(u: &Field, nl: &Nonlinearity, cfg: &OperatorConfig) -> Linearization {
    let g = u.grid();
    let m = g.m();
    let p = cfg.p;
    let eps2 = cfg.eps_degenerate * cfg.eps_degenerate;
    let geo = g.geometry(p);
    let k: Vec<f64> = u
        .slopes()
        .iter()
        .zip(geo.faces.iter().zip(g.widths()))
        .map(|(&d, (&a, &h))| {
            let coeff = if p == 2.0 {
                1.0
            } else {
                (p - 1.0) * (d * d + eps2).powf(0.5 * (p - 2.0))
            };
            a * coeff / h
        })
        .collect();
    let mut stiff = Tridiagonal::zeros(m);
    for i in 0..m {
        stiff.diag[i] = k[i] + if i > 0 { k[i - 1] } else { 0.0 };
        if i + 1 < m {
            stiff.upper[i] = -k[i];
            stiff.lower[i] = -k[i];
        }
    }
    let reaction = u.values()[..m]
        .iter()
        .map(|&v| -nl.source_derivative(v))
        .collect();
    Linearization {
        stiffness: stiff,
        reaction,
        weights: geo.weights[..m].to_vec(),
        p,
    }
}

/// Jacobian of [`residual`] at `u`.
pub fn linearize(u: &Field, params: &ProblemParams, cfg: &OperatorConfig) -> Result<Linearization> {
    linearize_with(u, &Nonlinearity::full(params), cfg)
}
