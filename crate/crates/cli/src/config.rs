//! Flat JSON run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use singular_plap::{
    validate_params, Error, ExponentBound, GridSpec, ProblemParams, RegIndex, ScanOptions,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Ladder,
    Branch,
    Verify,
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Full,
    PureSingular,
}

/// Which solution of the full problem `solve` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    Lower,
    Upper,
}

/// Fixtures that must make `verify` fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeControl {
    PermutedLadder,
    WrongExponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Regularization index; `0` is the limit problem.
    pub n: u64,
    pub m: usize,
    pub grading: f64,
    pub tol: f64,
    pub ode_tol: f64,
    pub output_dir: PathBuf,
    pub problem: Problem,
    pub seed: Seed,
    pub ladder_n: Vec<u64>,
    /// Smallest swept λ; defaults to `lambda_max / lambda_count`.
    pub lambda_min: Option<f64>,
    /// Largest swept λ; defaults to the nonexistence bound.
    pub lambda_max: Option<f64>,
    pub lambda_count: usize,
    pub m_lo: f64,
    pub m_hi: f64,
    pub resolution: usize,
    pub workers: usize,
    pub negative_control: Option<NegativeControl>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Verify,
            dim: 3,
            p: 2.0,
            q: 2.0,
            delta: 2.0,
            lambda: 1.0,
            n: 100,
            m: 1024,
            grading: 3.0,
            tol: 1e-10,
            ode_tol: 1e-10,
            output_dir: PathBuf::from("out"),
            problem: Problem::Full,
            seed: Seed::Lower,
            ladder_n: (0..=10).map(|k| 1u64 << k).collect(),
            lambda_min: None,
            lambda_max: None,
            lambda_count: 64,
            m_lo: 1e-3,
            m_hi: 1e3,
            resolution: 400,
            workers: 1,
            negative_control: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner().to_string();
            let key = match inner.split('`').nth(1) {
                Some(k) if inner.starts_with("unknown field") => k.to_string(),
                _ => e.path().to_string(),
            };
            CliError::config(key, inner)
        })
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams::new(
            self.dim,
            self.p,
            self.q,
            self.delta,
            self.lambda,
            RegIndex::from_u64(self.n),
        )
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            m: self.m,
            grading: self.grading,
            dim: self.dim,
        }
    }

    pub fn scan(&self) -> ScanOptions {
        ScanOptions {
            m_lo: self.m_lo,
            m_hi: self.m_hi,
            resolution: self.resolution,
            ode_tol: self.ode_tol,
        }
    }

    /// Checks every key, the problem parameters first.
    pub fn validate(&self) -> CliResult<()> {
        validate_params(self.params()).map_err(param_error)?;
        if self.m < 16 {
            return Err(CliError::config("m", format!("need at least 16 cells, got {}", self.m)));
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(CliError::config("grading", format!("must be >= 1, got {}", self.grading)));
        }
        for (key, v) in [("tol", self.tol), ("ode_tol", self.ode_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::config(key, format!("must lie in (0, 1), got {v}")));
            }
        }
        if self.ladder_n.is_empty()
            || self.ladder_n.contains(&0)
            || self.ladder_n.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(CliError::config("ladder_n", "must be a nonempty ascending list of positive integers"));
        }
        if self.lambda_count == 0 {
            return Err(CliError::config("lambda_count", "must be positive"));
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::config("lambda_max", format!("must be positive, got {l}")));
            }
        }
        if let Some(l) = self.lambda_min {
            if !(l >= 0.0 && l.is_finite()) || self.lambda_max.is_some_and(|hi| l >= hi) {
                return Err(CliError::config("lambda_min", format!("must lie in [0, lambda_max), got {l}")));
            }
        }
        if !(self.m_lo > 0.0 && self.m_hi > self.m_lo && self.m_hi.is_finite()) {
            return Err(CliError::config("m_hi", "need 0 < m_lo < m_hi"));
        }
        if self.resolution < 2 {
            return Err(CliError::config("resolution", "need at least 2 scan samples"));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers", "need at least one worker"));
        }
        Ok(())
    }

    /// Swept λ values: `lambda_count` evenly spaced points ending at `lambda_max`.
    pub fn lambda_grid(&self, lambda_max: f64) -> Vec<f64> {
        let k = self.lambda_count;
        let lo = self.lambda_min.unwrap_or(lambda_max / k as f64);
        if k == 1 {
            return vec![lambda_max];
        }
        (0..k)
            .map(|i| lo + (lambda_max - lo) * i as f64 / (k - 1) as f64)
            .collect()
    }
}

fn param_error(e: Error) -> CliError {
    let key = match &e {
        Error::OutOfExponentSet { violated } => match violated {
            ExponentBound::PAboveOne | ExponentBound::PBelowDimension => "p",
            ExponentBound::QAboveSublinear | ExponentBound::QBelowSerrin => "q",
            ExponentBound::Dimension => "N",
        },
        Error::NonPositiveDelta(_) => "delta",
        Error::NegativeLambda(_) => "lambda",
        Error::NonFiniteParameter { name, .. } => name,
        _ => "params",
    };
    CliError::config(key, e.to_string())
}
