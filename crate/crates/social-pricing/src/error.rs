//! Error type shared by every module. Each variant names the contract it
//! guards; payloads carry the diagnostics a caller needs to act on the
//! failure without re-running the solver.

use std::fmt;

#[derive(Debug)]
pub enum ModelError {
    /// Profiling accuracy is zero; the profiling-aware solver is undefined
    /// there. Use the no-profiling benchmark instead.
    ZeroAccuracy,
    /// Profiling accuracy is one; the uniform-price formula divides by zero.
    /// Use the perfect-profiling benchmark instead.
    PerfectAccuracy,
    /// No interior uniform price exists for the given threshold: the
    /// nonprofiled revenue is still increasing at the corner. Carries the
    /// threshold probed and the minimum threshold for which an interior
    /// price exists.
    NoInteriorPrice { v_star: f64, v_check: f64 },
    /// The equilibrium system has no sign change on its admissible bracket.
    /// Carries the bracket and endpoint values of the fixed-point defect.
    NoEquilibriumFound {
        lo: f64,
        hi: f64,
        defect_lo: f64,
        defect_hi: f64,
    },
    /// Two-sided monotone iteration converged to different limits, so the
    /// fixed point is not unique on this instance. Carries the gap.
    MultipleFixedPoints { lower: f64, upper: f64 },
    /// Iteration budget exhausted before the residual target was met.
    NonConvergence { iterations: u32, residual: f64 },
    /// Discretized best-response iteration reached different limits from the
    /// two monotone starts.
    LimitsDisagree { lower: f64, upper: f64 },
    /// The candidate uniform price is not below every type threshold.
    PriceExceedsThreshold { price: f64, min_threshold: f64 },
    /// The queried valuation lies at or above the boundary below which the
    /// payoff-increasing region is defined.
    AboveThreshold { v: f64, v_hat: f64 },
    /// Operation is only derived for a specific distribution family.
    UnsupportedDistribution { op: &'static str, kind: &'static str },
    /// Query point lies outside the distribution support.
    OutOfSupport { v: f64, lo: f64, hi: f64 },
    /// Distribution support has zero (or negative) width.
    DegenerateDistribution,
    /// Too few samples for a fit.
    InsufficientData { needed: usize, got: usize },
    /// Likelihood became non-finite (e.g. the scale collapsed).
    NonFiniteLikelihood,
    /// Malformed input file.
    ParseError { line: usize, message: String },
    /// Graph file contained no usable edges.
    EmptyGraph,
    /// The market is trivial (support too narrow relative to the social
    /// benefit), so every accuracy level sits in the flat regime.
    TrivialRegime { vbar: f64, threshold: f64 },
    /// Invalid configuration value; the message names the field.
    Config(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ZeroAccuracy => {
                write!(f, "profiling accuracy is 0; use the no-profiling benchmark")
            }
            ModelError::PerfectAccuracy => write!(
                f,
                "profiling accuracy is 1; use the perfect-profiling benchmark"
            ),
            ModelError::NoInteriorPrice { v_star, v_check } => write!(
                f,
                "no interior uniform price: threshold {v_star} is not above the existence bound {v_check}"
            ),
            ModelError::NoEquilibriumFound {
                lo,
                hi,
                defect_lo,
                defect_hi,
            } => write!(
                f,
                "no equilibrium: fixed-point defect has no sign change on [{lo}, {hi}] (endpoint defects {defect_lo}, {defect_hi})"
            ),
            ModelError::MultipleFixedPoints { lower, upper } => write!(
                f,
                "fixed point not unique: monotone limits differ (lower {lower}, upper {upper})"
            ),
            ModelError::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:.3e})"
            ),
            ModelError::LimitsDisagree { lower, upper } => write!(
                f,
                "best-response limits disagree (from below {lower}, from above {upper})"
            ),
            ModelError::PriceExceedsThreshold {
                price,
                min_threshold,
            } => write!(
                f,
                "uniform price {price} is not below the smallest threshold {min_threshold}"
            ),
            ModelError::AboveThreshold { v, v_hat } => write!(
                f,
                "valuation {v} is at or above the boundary {v_hat}; the monotone region is undefined there"
            ),
            ModelError::UnsupportedDistribution { op, kind } => {
                write!(f, "{op} is only available for specific families, not {kind}")
            }
            ModelError::OutOfSupport { v, lo, hi } => {
                write!(f, "value {v} lies outside the support [{lo}, {hi}]")
            }
            ModelError::DegenerateDistribution => write!(f, "distribution support has zero width"),
            ModelError::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            ModelError::NonFiniteLikelihood => {
                write!(f, "likelihood is non-finite (scale collapsed or invalid data)")
            }
            ModelError::ParseError { line, message } => {
                write!(f, "parse error at line {line}: {message}")
            }
            ModelError::EmptyGraph => write!(f, "graph file contains no usable edges"),
            ModelError::TrivialRegime { vbar, threshold } => write!(
                f,
                "trivial market: support width {vbar} does not exceed 2*ln(n-1+omega0) = {threshold}"
            ),
            ModelError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            ModelError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl ModelError {
    /// Coarse failure class shared by the CLI exit codes and the C ABI
    /// status codes: 1 invalid input, 2 solver failure, 3 I/O.
    pub fn class(&self) -> u8 {
        match self {
            ModelError::Config(_)
            | ModelError::ParseError { .. }
            | ModelError::EmptyGraph
            | ModelError::InsufficientData { .. }
            | ModelError::OutOfSupport { .. }
            | ModelError::DegenerateDistribution
            | ModelError::UnsupportedDistribution { .. } => 1,
            ModelError::Io(_) => 3,
            _ => 2,
        }
    }
}

impl std::error::Error for ModelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ModelError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
