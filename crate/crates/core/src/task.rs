use serde::{Deserialize, Serialize};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::significance::Significance;

/// Spawn-order sequence number, unique within one runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub u64);

/// Handle returned by [`Runtime::init_group`](crate::Runtime::init_group).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId(pub u32);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Opaque identifier of a data region named in a task's inputs or outputs.
///
/// Regions are compared by identity only. Use [`RegionId::named`] for a
/// whole buffer and [`RegionId::part`] for a row, block or tile of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionId(pub u64);

impl RegionId {
    pub fn named(name: &str) -> RegionId {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        name.hash(&mut h);
        RegionId(h.finish())
    }

    pub fn part(self, index: u64) -> RegionId {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.0, index).hash(&mut h);
        RegionId(h.finish())
    }
}

/// What the runtime did with a task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExecutionDecision {
    Accurate,
    Approximate,
    /// Non-accurate and no approximate body was supplied.
    Dropped,
}

impl ExecutionDecision {
    /// The non-accurate outcome for a task.
    pub fn non_accurate(has_approx: bool) -> Self {
        if has_approx {
            ExecutionDecision::Approximate
        } else {
            ExecutionDecision::Dropped
        }
    }

    pub fn from_accurate(accurate: bool, has_approx: bool) -> Self {
        if accurate {
            ExecutionDecision::Accurate
        } else {
            Self::non_accurate(has_approx)
        }
    }

    pub fn is_accurate(self) -> bool {
        self == ExecutionDecision::Accurate
    }
}

/// Which body a task runs with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Accurate,
    Approximate,
}

pub(crate) type TaskBody = Box<dyn FnOnce(Variant) + Send + 'static>;

/// A task ready to be handed to [`Runtime::spawn`](crate::Runtime::spawn).
///
/// The accurate and approximate bodies receive the same argument value,
/// which is moved into whichever body the runtime picks.
///
/// ```
/// use sigrt::{PolicyConfig, RegionId, Runtime, Significance, Task};
///
/// let mut rt = Runtime::new(2, PolicyConfig::Agnostic).unwrap();
/// let g = rt.init_group("demo", 0.5).unwrap();
/// let sig = Significance::new(0.7).unwrap();
/// let task = Task::new(g, sig, 21u32, |x| assert_eq!(x * 2, 42))
///     .approx(|x| assert_eq!(x, 21))
///     .writes(RegionId::named("out"));
/// rt.spawn(task).unwrap();
/// rt.wait_all().unwrap();
/// ```
pub struct Task {
    pub(crate) group: GroupId,
    pub(crate) significance: Significance,
    pub(crate) body: TaskBody,
    pub(crate) has_approx: bool,
    pub(crate) inputs: Vec<RegionId>,
    pub(crate) outputs: Vec<RegionId>,
}

impl Task {
    #[allow(clippy::new_ret_no_self)]
    pub fn new<A, F>(group: GroupId, significance: Significance, args: A, accurate: F) -> TaskBuilder<A, F, fn(A)>
    where
        A: Send + 'static,
        F: FnOnce(A) + Send + 'static,
    {
        TaskBuilder {
            group,
            significance,
            args,
            accurate,
            approx: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Task")
            .field("group", &self.group)
            .field("significance", &self.significance)
            .field("has_approx", &self.has_approx)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .finish_non_exhaustive()
    }
}

pub struct TaskBuilder<A, F, G> {
    group: GroupId,
    significance: Significance,
    args: A,
    accurate: F,
    approx: Option<G>,
    inputs: Vec<RegionId>,
    outputs: Vec<RegionId>,
}

impl<A, F, G> TaskBuilder<A, F, G>
where
    A: Send + 'static,
    F: FnOnce(A) + Send + 'static,
    G: FnOnce(A) + Send + 'static,
{
    /// Cheaper alternative body taking the same arguments.
    pub fn approx<H>(self, approx: H) -> TaskBuilder<A, F, H>
    where
        H: FnOnce(A) + Send + 'static,
    {
        TaskBuilder {
            group: self.group,
            significance: self.significance,
            args: self.args,
            accurate: self.accurate,
            approx: Some(approx),
            inputs: self.inputs,
            outputs: self.outputs,
        }
    }

    pub fn reads(mut self, region: RegionId) -> Self {
        self.inputs.push(region);
        self
    }

    pub fn writes(mut self, region: RegionId) -> Self {
        self.outputs.push(region);
        self
    }

    pub fn reads_all(mut self, regions: impl IntoIterator<Item = RegionId>) -> Self {
        self.inputs.extend(regions);
        self
    }

    pub fn writes_all(mut self, regions: impl IntoIterator<Item = RegionId>) -> Self {
        self.outputs.extend(regions);
        self
    }

    pub fn build(self) -> Task {
        let TaskBuilder { group, significance, args, accurate, approx, inputs, outputs } = self;
        let has_approx = approx.is_some();
        let body: TaskBody = Box::new(move |variant| match (variant, approx) {
            (Variant::Approximate, Some(approx)) => approx(args),
            _ => accurate(args),
        });
        Task { group, significance, body, has_approx, inputs, outputs }
    }
}

impl<A, F, G> From<TaskBuilder<A, F, G>> for Task
where
    A: Send + 'static,
    F: FnOnce(A) + Send + 'static,
    G: FnOnce(A) + Send + 'static,
{
    fn from(b: TaskBuilder<A, F, G>) -> Task {
        b.build()
    }
}
