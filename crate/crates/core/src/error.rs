use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A population or simulation spec violates its invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Graph or sampling parameters out of range.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A scenario or policy catalog failed validation.
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    /// Node id outside the graph.
    #[error("node {node} out of range for graph of {n} nodes")]
    NodeOutOfRange { node: u32, n: u32 },

    /// No answer could be extracted from a backend response.
    #[error("could not parse a valid answer from response: {raw:?}")]
    ParseFailure { raw: String },

    /// The environment variable holding the API credential is unset.
    #[error("missing credential: environment variable {var} is not set")]
    MissingCredential { var: String },

    /// Transport-level failure talking to the decision backend.
    #[error("transport error: {0}")]
    Transport(String),

    /// The backend answered with a non-success HTTP status.
    #[error("backend returned HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },

    /// All retry attempts were consumed without a usable answer.
    #[error("backend failed after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },

    /// A backend response does not match the query kind it answered.
    #[error("backend response does not match query kind: expected {expected}")]
    ResponseMismatch { expected: &'static str },

    /// A decision failed inside an engine run; carries its coordinates.
    #[error("decision failed for agent {agent} ({unit})")]
    DecisionFailed {
        agent: u32,
        unit: String,
        #[source]
        source: Box<Error>,
    },

    /// Trial grid arithmetic does not produce the requested trial count.
    #[error("trial grid mismatch: grid yields {actual} trials, {expected} requested")]
    GridMismatch { expected: usize, actual: usize },

    /// A punishment-rate cell has no outcomes.
    #[error("no outcomes for cell (allocation={allocation}, cost={cost})")]
    EmptyCell { allocation: u8, cost: u8 },

    /// A statistic was asked of data that cannot support it.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An aggregation was asked of an empty table or trace.
    #[error("empty table")]
    EmptyTable,

    /// Relative change is undefined for a zero or negative baseline.
    #[error("relative change undefined for non-positive baseline {0}")]
    NonPositiveBaseline(f64),

    /// The OLS design matrix is singular; no surrogate model can be fit.
    #[error("singular design matrix: traits are collinear in this dataset")]
    SingularDesign,

    /// A trace cannot be resumed or replayed.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
