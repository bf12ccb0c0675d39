use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A data cell is missing or a row has the wrong number of fields.
    #[error("incomplete data: {0}")]
    CompleteDataViolation(String),

    /// Malformed input file (header, arity sidecar, feature file, result file).
    #[error("schema error: {0}")]
    SchemaError(String),

    /// A family (node, parent set) violates node ∉ parents or index bounds.
    #[error("invalid family: {0}")]
    InvalidFamily(String),

    /// A structural feature is self-contradictory (self-loop, required ∩ forbidden).
    #[error("invalid feature: {0}")]
    InvalidFeature(String),

    /// A feature requires more parents on some node than the indegree bound allows.
    #[error("feature infeasible under indegree bound: {0}")]
    InfeasibleFeatureUnderBound(String),

    /// Out-of-range run parameters (indegree bound, variable cap, thread count).
    #[error("config error: {0}")]
    ConfigError(String),

    /// The inclusion-exclusion sums cancelled catastrophically; results withheld.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// A request exceeds a hard size cap (oracle enumeration, Robinson counts).
    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
