use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prior does not sum to 1 (sum = {sum}) or has a negative entry at state {state:?}")]
    NonStochasticPrior { sum: f64, state: Option<usize> },

    #[error("signaling row for state {state} is not a probability vector (sum = {sum})")]
    NonStochasticSignaling { state: usize, sum: f64 },

    #[error("{table} utility for action {action}, state {state} is {value}, outside [0, 1]")]
    UtilityOutOfRange {
        table: &'static str,
        action: usize,
        state: usize,
        value: f64,
    },

    #[error("state {state} has zero prior probability")]
    ZeroPriorState { state: usize },

    #[error("instance must have at least one {0}")]
    EmptyDimension(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signal index {index} at position {position} is out of range (|S| = {num_signals})")]
    InvalidSignalIndex {
        position: usize,
        index: usize,
        num_signals: usize,
    },

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("multinomial coefficient overflows u64; about {required_bits} bits are required")]
    Overflow { required_bits: u32 },

    #[error("{what} has {size} elements, above the limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("deviation set is empty")]
    EmptyDeviationSet,

    #[error("slack must be nonnegative, got {0}")]
    NegativeEpsilon(f64),

    #[error("non-finite LP coefficient at position {0}")]
    NonFiniteCoefficient(usize),

    #[error("LP solver failed: {0}")]
    NumericalFailure(String),

    #[error("run aborted at round {round}: {source}")]
    RunAborted { round: u64, source: Box<Error> },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error(
        "played action {played} differs from the action {prescribed} prescribed for class {class}"
    )]
    InconsistentAction {
        class: usize,
        prescribed: usize,
        played: usize,
    },

    #[error("observed utility {0} outside [0, 1]")]
    ObservationOutOfRange(f64),

    #[error("exploration length E = {e} must satisfy 1 <= E and E * |A| <= T (|A| = {num_actions}, T = {horizon})")]
    InvalidE {
        e: u64,
        num_actions: usize,
        horizon: u64,
    },

    #[error("horizon must be at least 1")]
    InvalidHorizon,

    #[error("unknown fixture {0:?} (expected thimp-X, thimp-Y, lb-X or lb-Y)")]
    UnknownFixture(String),

    #[error("fixture parameter {eps} outside its valid range {range}")]
    EpsOutOfRange { eps: f64, range: &'static str },

    #[error("insufficient data for slope fit: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
