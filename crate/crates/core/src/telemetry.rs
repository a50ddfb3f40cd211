//! Per-task execution records.

use serde::{Deserialize, Serialize};

use crate::significance::Significance;
use crate::task::{ExecutionDecision, GroupId, TaskId};

/// Telemetry for one resolved task.
///
/// Timestamps are nanoseconds since the runtime was created. For dropped
/// tasks `start_ns == end_ns` is the instant the task was resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub id: TaskId,
    pub group: GroupId,
    /// Barrier generation of the group when the task was spawned.
    pub epoch: u32,
    pub significance: Significance,
    /// Accurate ratio requested for the group when the task was spawned.
    pub ratio: f64,
    pub has_approx: bool,
    pub decision: ExecutionDecision,
    /// Worker that ran or resolved the task; `None` for the master thread.
    pub worker: Option<usize>,
    /// Queue the task was issued to; `None` if it was never enqueued.
    pub queue: Option<usize>,
    pub start_ns: u64,
    pub end_ns: u64,
}

/// Key identifying one accounting unit: a group between two barriers.
pub type GroupEpoch = (GroupId, u32);

impl ExecutionRecord {
    pub fn group_epoch(&self) -> GroupEpoch {
        (self.group, self.epoch)
    }
}
