use thiserror::Error;

/// Invalid runtime, group or task configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("GTB buffer capacity must be at least 1")]
    EmptyBuffer,
    #[error("significance {0} is outside [0, 1]")]
    SignificanceOutOfRange(f64),
    #[error("accurate ratio {0} is outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("invalid value `{value}` for {key}")]
    InvalidValue { key: &'static str, value: String },
}

/// Failures reported by the runtime API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown task group {0}")]
    UnknownGroup(u32),
    #[error("task group `{0}` still has unresolved tasks")]
    GroupBusy(String),
    #[error("runtime has been shut down")]
    ShutDown,
    #[error("{0} task bodies panicked since the last barrier")]
    TaskPanicked(usize),
}
