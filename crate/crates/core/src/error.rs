use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("unknown state `{state}` of process `{process}`")]
    UnknownState { process: String, state: String },
    #[error("process name `{0}` is reserved")]
    ReservedName(String),
    #[error("duplicate process `{0}`")]
    DuplicateProcess(String),
    #[error("duplicate payload `{0}`")]
    DuplicatePayload(String),
    #[error("undeclared payload `{0}`")]
    UndeclaredPayload(String),
    #[error("too many processes ({0}, at most 64)")]
    TooManyProcesses(usize),
    #[error("too many payloads ({0}, at most 128)")]
    TooManyPayloads(usize),
}

/// DSL error with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Why an indexed action cannot fire in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("no transition: {0}")]
    NoTransition(String),
    #[error("wrong buffer head: {0}")]
    WrongBufferHead(String),
    #[error("stale mid {0}: already used")]
    StaleMid(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    /// The characterization only applies to traces with causal delivery.
    #[error("trace violates causal delivery; characterization does not apply")]
    CausalDeliveryViolated,
    #[error("trace is not {0}-synchronous")]
    NotKSynchronous(usize),
    #[error("k must be at least 1")]
    ZeroK,
}

/// Exploration stopped at the configured node cap.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node cap of {cap} configurations exceeded")]
pub struct NodeCapExceeded {
    pub cap: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    NodeCap(#[from] NodeCapExceeded),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}
