//! Problem parameters, derived exponents and the admissibility checks.
//!
//! A problem is the tuple `(N, p, q, δ, λ, n)`: the ball dimension, the
//! p-Laplacian exponent, the power nonlinearity, the singularity strength,
//! the singular-term weight and the regularization index. `n` selects the
//! regularized source `λ (u + 1/n)^-δ`; [`RegIndex::Limit`] is the truly
//! singular `λ u^-δ`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, ExponentBound, Result};
use crate::grid::Field;

/// Regularization index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegIndex {
    Finite(u64),
    Limit,
}

impl RegIndex {
    /// The shift `1/n` added to `u` inside the singular term (0 at the limit).
    pub fn shift(self) -> f64 {
        match self {
            RegIndex::Finite(n) => 1.0 / n as f64,
            RegIndex::Limit => 0.0,
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, RegIndex::Limit)
    }

    /// Wire encoding: `0` is the limit.
    pub fn as_u64(self) -> u64 {
        match self {
            RegIndex::Finite(n) => n,
            RegIndex::Limit => 0,
        }
    }

    pub fn from_u64(n: u64) -> Self {
        if n == 0 {
            RegIndex::Limit
        } else {
            RegIndex::Finite(n)
        }
    }
}

impl std::fmt::Display for RegIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegIndex::Finite(n) => write!(f, "{n}"),
            RegIndex::Limit => f.write_str("limit"),
        }
    }
}

impl Serialize for RegIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.as_u64())
    }
}

impl<'de> Deserialize<'de> for RegIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        u64::deserialize(d).map(RegIndex::from_u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(rename = "n")]
    pub reg: RegIndex,
}

impl ProblemParams {
    pub fn new(dim: usize, p: f64, q: f64, delta: f64, lambda: f64, reg: RegIndex) -> Self {
        Self {
            dim,
            p,
            q,
            delta,
            lambda,
            reg,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_reg(mut self, reg: RegIndex) -> Self {
        self.reg = reg;
        self
    }

    /// Serrin exponent `p_* = p(N-1)/(N-p)`.
    pub fn serrin(&self) -> f64 {
        serrin_exponent(self.dim, self.p)
    }
}

pub fn serrin_exponent(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    p * (n - 1.0) / (n - p)
}

/// Checks the standing hypotheses `1 < p < N`, `p - 1 < q < p_* - 1`,
/// `δ > 0`, `λ >= 0`. All inequalities are strict with no slack.
pub fn validate_params(raw: ProblemParams) -> Result<ProblemParams> {
    for (name, value) in [
        ("p", raw.p),
        ("q", raw.q),
        ("delta", raw.delta),
        ("lambda", raw.lambda),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteParameter { name, value });
        }
    }
    let bad = |violated| Err(Error::OutOfExponentSet { violated });
    if raw.dim < 2 {
        return bad(ExponentBound::Dimension);
    }
    if !(raw.p > 1.0) {
        return bad(ExponentBound::PAboveOne);
    }
    if !(raw.p < raw.dim as f64) {
        return bad(ExponentBound::PBelowDimension);
    }
    if !(raw.q > raw.p - 1.0) {
        return bad(ExponentBound::QAboveSublinear);
    }
    if !(raw.q < raw.serrin() - 1.0) {
        return bad(ExponentBound::QBelowSerrin);
    }
    if !(raw.delta > 0.0) {
        return Err(Error::NonPositiveDelta(raw.delta));
    }
    if raw.lambda < 0.0 {
        return Err(Error::NegativeLambda(raw.lambda));
    }
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// `p_*`
    pub serrin: f64,
    /// `1/(δ+p-1)`: the sup-norm of the pure singular solution scales as `λ^scaling_exp`.
    pub scaling_exp: f64,
    /// `p/(δ+p-1)`: `u ~ (1-r)^boundary_exp` at the boundary.
    pub boundary_exp: f64,
    /// `(p-1)(δ+p-1)/p²`: powers `u^α` with `α` above this have finite energy.
    pub alpha_threshold: f64,
    /// `p/(p-1)`
    pub p_conj: f64,
}

pub fn derived_exponents(params: &ProblemParams) -> DerivedExponents {
    let (p, delta) = (params.p, params.delta);
    let s = delta + p - 1.0;
    DerivedExponents {
        serrin: params.serrin(),
        scaling_exp: 1.0 / s,
        boundary_exp: p / s,
        alpha_threshold: (p - 1.0) * s / (p * p),
        p_conj: p / (p - 1.0),
    }
}

/// Maps a limit pure-singular solution at `lambda_from` to the solution at
/// `lambda_to`: multiplies by `(lambda_to/lambda_from)^(1/(δ+p-1))`.
pub fn scale_field(
    u: &Field,
    lambda_from: f64,
    lambda_to: f64,
    params: &ProblemParams,
) -> Result<Field> {
    if !params.reg.is_limit() {
        return Err(Error::ScalingNotExact);
    }
    if !(lambda_from > 0.0 && lambda_to > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scaling needs positive lambdas, got {lambda_from} -> {lambda_to}"
        )));
    }
    if lambda_from == lambda_to {
        return Ok(u.clone());
    }
    let factor = (lambda_to / lambda_from).powf(derived_exponents(params).scaling_exp);
    Ok(u.map(|v| factor * v))
}
