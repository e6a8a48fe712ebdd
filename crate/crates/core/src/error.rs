use thiserror::Error;

/// Which standing hypothesis on the exponents was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentBound {
    /// `p > 1`
    PAboveOne,
    /// `p < N`
    PBelowDimension,
    /// `q > p - 1`
    QAboveSublinear,
    /// `q < p_* - 1` with `p_* = p(N-1)/(N-p)` the Serrin exponent
    QBelowSerrin,
    /// `N >= 2`
    Dimension,
}

impl std::fmt::Display for ExponentBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExponentBound::PAboveOne => "p > 1",
            ExponentBound::PBelowDimension => "p < N",
            ExponentBound::QAboveSublinear => "q > p - 1",
            ExponentBound::QBelowSerrin => "q < p_* - 1 (Serrin exponent p_* = p(N-1)/(N-p))",
            ExponentBound::Dimension => "N >= 2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameters outside the admissible exponent set: {violated} fails")]
    OutOfExponentSet { violated: ExponentBound },
    #[error("singularity strength delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("non-finite parameter {name} = {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },

    #[error("exact lambda-scaling requires the limit problem; the 1/n shift breaks homogeneity")]
    ScalingNotExact,

    #[error("grid too coarse: m = {0} < 16")]
    TooCoarse(usize),
    #[error("grading must be >= 1, got {0}")]
    InvalidGrading(f64),
    #[error("fields live on different grids")]
    GridMismatch,

    #[error("interior node {node} is nonpositive ({value}); singular term undefined")]
    NonpositiveInterior { node: usize, value: f64 },
    #[error("right-hand side is negative at node {node} ({value})")]
    NegativeRhs { node: usize, value: f64 },
    #[error("{solver} did not converge after {iterations} iterations (last measure {last})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last: f64,
    },
    #[error("mesh too coarse near the boundary: node {node} value {value} exceeds 10x the boundary-layer prediction {predicted}")]
    MeshTooCoarseNearBoundary {
        node: usize,
        value: f64,
        predicted: f64,
    },
    #[error("Newton converged to a deflated solution (sup-distance {distance})")]
    ConvergedToDeflated { distance: f64 },
    #[error("bracket violated at node {node} by {amount}")]
    BracketViolated { node: usize, amount: f64 },
    #[error("rayleigh quotient of the zero field")]
    ZeroField,
    #[error("not a sub-solution: residual {residual} > 0 at node {node}")]
    NotSubSolution { node: usize, residual: f64 },
    #[error("not a super-solution: residual {residual} < 0 at node {node}")]
    NotSuperSolution { node: usize, residual: f64 },
    #[error("no mu in (0, {delta2}) with A(mu) = {lambda0}; max A = {max_a}")]
    NoSuchMu {
        lambda0: f64,
        delta2: f64,
        max_a: f64,
    },
    #[error("ladder error at n = {n}: {source}")]
    Ladder {
        n: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("shooting step underflow at r = {r} (u = {u}, flux = {flux})")]
    StepUnderflow { r: f64, u: f64, flux: f64 },
    #[error("fit window holds {got} nodes, need at least {need}")]
    WindowTooSmall { got: usize, need: usize },
    #[error("comparison precondition not met: {0}")]
    PreconditionNotMet(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
