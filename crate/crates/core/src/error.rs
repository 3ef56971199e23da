use thiserror::Error;

/// Errors raised by the library. Every variant names the offending input so
/// the CLI can print a single-line diagnostic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricDistance { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative or non-finite distance at ({i}, {j}): {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero self-distance at state {i}: {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("triangle inequality violated: d({i},{k}) = {direct} > d({i},{j}) + d({j},{k}) = {via}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },
    #[error("base index {index} out of range for {len} states")]
    BadBaseIndex { index: usize, len: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("kernel row {row} is not stochastic: {reason}")]
    NotStochastic { row: usize, reason: String },
    #[error("space mismatch: expected {expected} states, got {got}")]
    SpaceMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("cap and slope are both zero")]
    NonpositiveParameters,
    #[error("cost is not a pseudo-metric")]
    NotPseudoMetric,
    #[error("marginal mismatch: L1 discrepancy {0:e}")]
    MarginalMismatch(f64),
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error("singular stationary system for class {class}")]
    SingularSolve { class: usize },
    #[error("ball of radius {radius} around state {center} contains no other state")]
    EmptyBall { center: usize, radius: f64 },
    #[error("measure has empty support")]
    EmptySupport,
    #[error("support separation needs two distinct measures")]
    DistinctMeasuresRequired,
    #[error("assumption A1 not satisfied on the supplied grid")]
    A1NotSatisfied,
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("grid too coarse: {0}")]
    GridResolutionTooCoarse(String),
    #[error("argument {value} outside domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("unknown state label {0:?}")]
    UnknownState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
