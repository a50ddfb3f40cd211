//! A task-parallel runtime where every task carries a significance value
//! and, optionally, a cheaper approximate body.
//!
//! Tasks belong to groups. Each group has a ratio: the minimum fraction of
//! its tasks that must run accurately, preferring the most significant
//! ones. Which tasks make the cut is decided by the configured
//! [`PolicyConfig`].

mod error;
pub mod policy;
pub mod quality;
mod queues;
mod runtime;
mod significance;
mod task;
pub mod telemetry;

pub use error::{ConfigError, RuntimeError};
pub use policy::{BufferSize, PolicyConfig};
pub use runtime::{Runtime, RuntimeOptions, DEFAULT_SPIN_LIMIT};
pub use significance::{accurate_quota, check_ratio, DiscreteLevel, Significance, LEVELS};
pub use task::{ExecutionDecision, GroupId, RegionId, Task, TaskBuilder, TaskId, Variant};
pub use telemetry::ExecutionRecord;
