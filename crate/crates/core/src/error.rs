use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("alphabet `{0}` must contain at least one symbol")]
    EmptyAlphabet(&'static str),
    #[error("kernel row (x={x}, s={s}) sums to {sum}, not 1")]
    RowNotNormalized { x: usize, s: usize, sum: f64 },
    #[error("state prior sums to {sum}, not 1")]
    PriorNotNormalized { sum: f64 },
    #[error("negative probability {value} in {location}")]
    NegativeProbability { location: &'static str, value: f64 },
    #[error("probability {value} in {location} is not a finite value in [0, 1]")]
    ProbabilityOutOfRange { location: &'static str, value: f64 },
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("observation (x={x}, y={y}) has zero probability")]
    ZeroProbabilityObservation { x: usize, y: usize },
    #[error("vector is not a probability distribution (sum {sum})")]
    NotADistribution { sum: f64 },
    #[error("distortion entry ({s}, {s_hat}) = {value} is negative or not finite")]
    InvalidDistortion { s: usize, s_hat: usize, value: f64 },
    #[error("the averaged channel has zero Shannon capacity")]
    ZeroCapacityChannel,
    #[error("distortion budget {budget} is infeasible; the smallest feasible budget is {min_feasible}")]
    InfeasibleDistortion { budget: f64, min_feasible: f64 },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("enumeration of {size} items exceeds the limit of {limit}")]
    TooLargeToEnumerate { size: f64, limit: u64 },
    #[error("conditional type has no row for input {x}")]
    MissingRow { x: usize },
    #[error("an identification code needs at least two identities")]
    DegenerateCode,
    #[error("{messages} messages cannot be carried by a length-{k} code with error below 1/2")]
    TooManyMessages { messages: usize, k: usize },
    #[error("time index {t} beyond blocklength {m}")]
    OutOfTime { t: usize, m: usize },
    #[error("input alphabet of size {size} exceeds the oracle limit {limit}")]
    AlphabetTooLarge { size: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
