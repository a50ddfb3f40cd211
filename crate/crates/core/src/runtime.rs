//! Master/worker scheduler and the public task API.
//!
//! The master thread (whoever owns the [`Runtime`]) spawns tasks and calls
//! the barriers. Dependency edges are built at spawn time; a task becomes
//! ready once its issue guard is released and every predecessor resolved.
//! Ready tasks are handed to worker queues round-robin. Workers pop their
//! own queue oldest-first and steal oldest-first from a random victim when
//! it runs dry.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use crate::error::{ConfigError, RuntimeError};
use crate::policy::{gtb_flush, lqh_decide, perforation_decide, BufferSize, GtbEntry, GtbQuota, PolicyConfig, SignificanceHistogram};
use crate::queues::WorkerQueues;
use crate::significance::{check_ratio, Significance};
use crate::task::{ExecutionDecision, GroupId, RegionId, Task, TaskBody, TaskId, Variant};
use crate::telemetry::ExecutionRecord;

/// Idle iterations a worker spins before parking.
pub const DEFAULT_SPIN_LIMIT: u32 = 64;

const ACCURATE: u8 = 0;
const APPROXIMATE: u8 = 1;
const DROPPED: u8 = 2;
/// Decided by the executing worker (LQH).
const DEFERRED: u8 = 3;
/// Sitting in a GTB buffer.
const UNDECIDED: u8 = 4;

const NO_QUEUE: usize = usize::MAX;
const READER_PRUNE_MIN: usize = 64;

fn encode(d: ExecutionDecision) -> u8 {
    match d {
        ExecutionDecision::Accurate => ACCURATE,
        ExecutionDecision::Approximate => APPROXIMATE,
        ExecutionDecision::Dropped => DROPPED,
    }
}

fn decode(code: u8) -> Option<ExecutionDecision> {
    match code {
        ACCURATE => Some(ExecutionDecision::Accurate),
        APPROXIMATE => Some(ExecutionDecision::Approximate),
        DROPPED => Some(ExecutionDecision::Dropped),
        _ => None,
    }
}

/// Worker count, policy and idle behaviour.
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeOptions {
    pub workers: usize,
    pub policy: PolicyConfig,
    pub spin_limit: u32,
}

impl RuntimeOptions {
    pub fn new(workers: usize, policy: PolicyConfig) -> Self {
        RuntimeOptions { workers, policy, spin_limit: DEFAULT_SPIN_LIMIT }
    }

    /// Reads `SIGRT_WORKERS` (default: available parallelism) and
    /// `SIGRT_SPIN` (default: [`DEFAULT_SPIN_LIMIT`]).
    pub fn from_env(policy: PolicyConfig) -> Result<Self, ConfigError> {
        let workers = match std::env::var("SIGRT_WORKERS") {
            Ok(v) => v.parse().map_err(|_| ConfigError::InvalidValue { key: "SIGRT_WORKERS", value: v })?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let spin_limit = match std::env::var("SIGRT_SPIN") {
            Ok(v) => v.parse().map_err(|_| ConfigError::InvalidValue { key: "SIGRT_SPIN", value: v })?,
            Err(_) => DEFAULT_SPIN_LIMIT,
        };
        Ok(RuntimeOptions { workers, policy, spin_limit })
    }
}

#[derive(Default)]
struct GroupCounters {
    created: AtomicU64,
    resolved: AtomicU64,
}

struct Deps {
    done: bool,
    successors: Vec<Arc<TaskNode>>,
}

struct TaskNode {
    id: TaskId,
    group: GroupId,
    epoch: u32,
    significance: Significance,
    ratio: f64,
    has_approx: bool,
    counters: Arc<GroupCounters>,
    decision: AtomicU8,
    queue: AtomicUsize,
    /// Unresolved predecessors plus one for the issue guard.
    pending: AtomicUsize,
    deps: Mutex<Deps>,
    body: Mutex<Option<TaskBody>>,
}

impl TaskNode {
    fn decision_code(&self) -> u8 {
        self.decision.load(Ordering::Acquire)
    }

    fn is_done(&self) -> bool {
        self.deps.lock().unwrap().done
    }

    fn has_successors(&self) -> bool {
        !self.deps.lock().unwrap().successors.is_empty()
    }

    fn record(&self, decision: ExecutionDecision, worker: Option<usize>, start_ns: u64, end_ns: u64) -> ExecutionRecord {
        let queue = self.queue.load(Ordering::Relaxed);
        ExecutionRecord {
            id: self.id,
            group: self.group,
            epoch: self.epoch,
            significance: self.significance,
            ratio: self.ratio,
            has_approx: self.has_approx,
            decision,
            worker,
            queue: (queue != NO_QUEUE).then_some(queue),
            start_ns,
            end_ns,
        }
    }
}

struct Shared {
    workers: usize,
    queues: WorkerQueues<Arc<TaskNode>>,
    round_robin: AtomicUsize,
    sleep_lock: Mutex<()>,
    sleep_cv: Condvar,
    sleepers: AtomicUsize,
    shutdown: AtomicBool,
    outstanding: AtomicU64,
    master_waiting: AtomicBool,
    wait_lock: Mutex<()>,
    wait_cv: Condvar,
    /// One buffer per worker plus a final one for the master.
    records: Vec<Mutex<Vec<ExecutionRecord>>>,
    panicked: AtomicUsize,
    clock: Instant,
    spin_limit: u32,
    proportional_ties: bool,
}

impl Shared {
    fn now_ns(&self) -> u64 {
        self.clock.elapsed().as_nanos() as u64
    }

    fn enqueue(&self, node: Arc<TaskNode>) {
        let q = self.round_robin.fetch_add(1, Ordering::Relaxed) % self.workers;
        node.queue.store(q, Ordering::Relaxed);
        self.queues.push(q, node);
        if self.sleepers.load(Ordering::SeqCst) > 0 {
            let _g = self.sleep_lock.lock().unwrap();
            self.sleep_cv.notify_one();
        }
    }

    /// Drops one pending count; the caller that takes it to zero makes the
    /// task ready.
    fn release(&self, node: Arc<TaskNode>, by: Option<usize>) {
        if node.pending.fetch_sub(1, Ordering::AcqRel) == 1 {
            self.ready(node, by);
        }
    }

    fn ready(&self, node: Arc<TaskNode>, by: Option<usize>) {
        if node.decision_code() == DROPPED {
            drop(node.body.lock().unwrap().take());
            let now = self.now_ns();
            let rec = node.record(ExecutionDecision::Dropped, by, now, now);
            self.resolve(node, by, rec);
        } else {
            self.enqueue(node);
        }
    }

    /// Marks a task finished and releases its successors. Dropped
    /// successors are resolved inline instead of being enqueued.
    fn resolve(&self, node: Arc<TaskNode>, by: Option<usize>, record: ExecutionRecord) {
        let slot = by.unwrap_or(self.workers);
        let mut work = vec![(node, record)];
        while let Some((node, record)) = work.pop() {
            self.records[slot].lock().unwrap().push(record);
            let successors = {
                let mut deps = node.deps.lock().unwrap();
                deps.done = true;
                std::mem::take(&mut deps.successors)
            };
            for s in successors {
                if s.pending.fetch_sub(1, Ordering::AcqRel) == 1 {
                    if s.decision_code() == DROPPED {
                        drop(s.body.lock().unwrap().take());
                        let now = self.now_ns();
                        let rec = s.record(ExecutionDecision::Dropped, by, now, now);
                        work.push((s, rec));
                    } else {
                        self.enqueue(s);
                    }
                }
            }
            self.count_resolved(&node);
        }
    }

    fn count_resolved(&self, node: &TaskNode) {
        let resolved = node.counters.resolved.fetch_add(1, Ordering::SeqCst) + 1;
        let group_idle = resolved == node.counters.created.load(Ordering::SeqCst);
        let all_idle = self.outstanding.fetch_sub(1, Ordering::SeqCst) == 1;
        if (group_idle || all_idle) && self.master_waiting.load(Ordering::SeqCst) {
            let _g = self.wait_lock.lock().unwrap();
            self.wait_cv.notify_all();
        }
    }
}

struct WorkerLocal {
    index: usize,
    histograms: HashMap<GroupId, SignificanceHistogram>,
    rng: SmallRng,
}

fn worker_main(shared: Arc<Shared>, index: usize) {
    let mut local = WorkerLocal {
        index,
        histograms: HashMap::new(),
        rng: SmallRng::seed_from_u64(0x5eed ^ index as u64),
    };
    let mut idle = 0u32;
    loop {
        let task = shared.queues.pop_own(index).or_else(|| shared.queues.steal(index, &mut local.rng));
        if let Some(node) = task {
            execute(&shared, &mut local, node);
            idle = 0;
            continue;
        }
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        idle += 1;
        if idle <= shared.spin_limit {
            if idle < 16 {
                std::hint::spin_loop();
            } else {
                std::thread::yield_now();
            }
            continue;
        }
        let guard = shared.sleep_lock.lock().unwrap();
        shared.sleepers.fetch_add(1, Ordering::SeqCst);
        let guard = if shared.queues.queued() == 0 && !shared.shutdown.load(Ordering::SeqCst) {
            shared.sleep_cv.wait(guard).unwrap()
        } else {
            guard
        };
        shared.sleepers.fetch_sub(1, Ordering::SeqCst);
        drop(guard);
        idle = 0;
    }
}

fn execute(shared: &Shared, local: &mut WorkerLocal, node: Arc<TaskNode>) {
    let decision = match decode(node.decision_code()) {
        Some(d) => d,
        None => {
            let hist = local.histograms.entry(node.group).or_default();
            let d = lqh_decide(hist, node.significance, node.ratio, shared.proportional_ties);
            let d = ExecutionDecision::from_accurate(d.is_accurate(), node.has_approx);
            node.decision.store(encode(d), Ordering::Release);
            d
        }
    };
    let body = node.body.lock().unwrap().take();
    let start = shared.now_ns();
    let variant = match decision {
        ExecutionDecision::Accurate => Some(Variant::Accurate),
        ExecutionDecision::Approximate => Some(Variant::Approximate),
        ExecutionDecision::Dropped => None,
    };
    if let (Some(variant), Some(body)) = (variant, body) {
        if catch_unwind(AssertUnwindSafe(|| body(variant))).is_err() {
            shared.panicked.fetch_add(1, Ordering::SeqCst);
        }
    }
    let end = shared.now_ns();
    let rec = node.record(decision, Some(local.index), start, end);
    shared.resolve(node, Some(local.index), rec);
}

struct GroupState {
    name: String,
    ratio: f64,
    epoch: u32,
    counters: Arc<GroupCounters>,
    spawned_in_epoch: u64,
    buffer: Vec<Arc<TaskNode>>,
    quota: GtbQuota,
}

impl GroupState {
    fn quiescent(&self) -> bool {
        self.buffer.is_empty() && self.counters.resolved.load(Ordering::SeqCst) == self.counters.created.load(Ordering::SeqCst)
    }
}

#[derive(Default)]
struct RegionState {
    last_writer: Option<Arc<TaskNode>>,
    readers: Vec<Arc<TaskNode>>,
    prune_at: usize,
}

/// Handle to a running significance-aware runtime.
///
/// Not meant to be shared between threads: spawns and barriers come from
/// one master thread, task bodies must not call back into the runtime.
pub struct Runtime {
    shared: Arc<Shared>,
    handles: Vec<JoinHandle<()>>,
    policy: PolicyConfig,
    groups: Vec<GroupState>,
    names: HashMap<String, GroupId>,
    regions: HashMap<RegionId, RegionState>,
    next_id: u64,
    log: Vec<ExecutionRecord>,
    panics_reported: usize,
    shut_down: bool,
}

impl Runtime {
    pub fn new(workers: usize, policy: PolicyConfig) -> Result<Runtime, ConfigError> {
        Runtime::with_options(RuntimeOptions::new(workers, policy))
    }

    pub fn with_options(opts: RuntimeOptions) -> Result<Runtime, ConfigError> {
        if opts.workers == 0 {
            return Err(ConfigError::NoWorkers);
        }
        opts.policy.validate()?;
        let proportional_ties = matches!(opts.policy, PolicyConfig::Lqh { proportional_ties: true });
        let shared = Arc::new(Shared {
            workers: opts.workers,
            queues: WorkerQueues::new(opts.workers),
            round_robin: AtomicUsize::new(0),
            sleep_lock: Mutex::new(()),
            sleep_cv: Condvar::new(),
            sleepers: AtomicUsize::new(0),
            shutdown: AtomicBool::new(false),
            outstanding: AtomicU64::new(0),
            master_waiting: AtomicBool::new(false),
            wait_lock: Mutex::new(()),
            wait_cv: Condvar::new(),
            records: (0..=opts.workers).map(|_| Mutex::new(Vec::new())).collect(),
            panicked: AtomicUsize::new(0),
            clock: Instant::now(),
            spin_limit: opts.spin_limit,
            proportional_ties,
        });
        let handles = (0..opts.workers)
            .map(|i| {
                let shared = shared.clone();
                std::thread::Builder::new()
                    .name(format!("sigrt-worker-{i}"))
                    .spawn(move || worker_main(shared, i))
                    .expect("failed to start worker thread")
            })
            .collect();
        Ok(Runtime {
            shared,
            handles,
            policy: opts.policy,
            groups: Vec::new(),
            names: HashMap::new(),
            regions: HashMap::new(),
            next_id: 0,
            log: Vec::new(),
            panics_reported: 0,
            shut_down: false,
        })
    }

    pub fn workers(&self) -> usize {
        self.shared.workers
    }

    pub fn policy(&self) -> PolicyConfig {
        self.policy
    }

    /// Tasks spawned so far.
    pub fn spawned(&self) -> u64 {
        self.next_id
    }

    /// Registers a group, or updates the ratio of an existing, idle group.
    pub fn init_group(&mut self, name: &str, ratio: f64) -> Result<GroupId, RuntimeError> {
        let ratio = check_ratio(ratio)?;
        if let Some(&gid) = self.names.get(name) {
            let g = &mut self.groups[gid.0 as usize];
            if !g.quiescent() {
                return Err(RuntimeError::GroupBusy(name.to_string()));
            }
            g.ratio = ratio;
            return Ok(gid);
        }
        let gid = GroupId(self.groups.len() as u32);
        self.groups.push(GroupState {
            name: name.to_string(),
            ratio,
            epoch: 0,
            counters: Arc::default(),
            spawned_in_epoch: 0,
            buffer: Vec::new(),
            quota: GtbQuota::default(),
        });
        self.names.insert(name.to_string(), gid);
        Ok(gid)
    }

    pub fn group_ratio(&self, group: GroupId) -> Result<f64, RuntimeError> {
        self.group(group).map(|g| g.ratio)
    }

    pub fn group_name(&self, group: GroupId) -> Result<&str, RuntimeError> {
        self.group(group).map(|g| g.name.as_str())
    }

    fn group(&self, group: GroupId) -> Result<&GroupState, RuntimeError> {
        self.groups.get(group.0 as usize).ok_or(RuntimeError::UnknownGroup(group.0))
    }

    /// Hands a task to the active policy. Does not block, except that a
    /// full GTB buffer is decided and issued before returning.
    pub fn spawn(&mut self, task: impl Into<Task>) -> Result<TaskId, RuntimeError> {
        if self.shut_down {
            return Err(RuntimeError::ShutDown);
        }
        let task: Task = task.into();
        let gi = task.group.0 as usize;
        let g = self.groups.get_mut(gi).ok_or(RuntimeError::UnknownGroup(task.group.0))?;

        let id = TaskId(self.next_id);
        self.next_id += 1;
        let node = Arc::new(TaskNode {
            id,
            group: task.group,
            epoch: g.epoch,
            significance: task.significance,
            ratio: g.ratio,
            has_approx: task.has_approx,
            counters: g.counters.clone(),
            decision: AtomicU8::new(UNDECIDED),
            queue: AtomicUsize::new(NO_QUEUE),
            pending: AtomicUsize::new(1),
            deps: Mutex::new(Deps { done: false, successors: Vec::new() }),
            body: Mutex::new(Some(task.body)),
        });
        g.counters.created.fetch_add(1, Ordering::SeqCst);
        self.shared.outstanding.fetch_add(1, Ordering::SeqCst);
        let index = g.spawned_in_epoch;
        g.spawned_in_epoch += 1;

        link(&mut self.regions, &node, &task.inputs, &task.outputs);

        match self.policy {
            PolicyConfig::Agnostic => self.issue(node, ExecutionDecision::Accurate),
            PolicyConfig::Perforation => {
                let s = node.significance;
                let d = if s.is_forced_accurate() {
                    ExecutionDecision::Accurate
                } else if s.is_forced_approximate() {
                    ExecutionDecision::Dropped
                } else {
                    perforation_decide(index, node.ratio)
                };
                self.issue(node, d);
            }
            PolicyConfig::Lqh { .. } => {
                node.decision.store(DEFERRED, Ordering::Release);
                self.shared.release(node, None);
            }
            PolicyConfig::Gtb { buffer } => {
                let g = &mut self.groups[gi];
                g.buffer.push(node);
                if let BufferSize::Bounded(cap) = buffer {
                    if g.buffer.len() >= cap {
                        self.flush(gi);
                    }
                }
            }
        }
        Ok(id)
    }

    fn issue(&self, node: Arc<TaskNode>, decision: ExecutionDecision) {
        node.decision.store(encode(decision), Ordering::Release);
        self.shared.release(node, None);
    }

    /// Decides and issues a group's GTB buffer in spawn order.
    fn flush(&mut self, gi: usize) {
        let g = &mut self.groups[gi];
        if g.buffer.is_empty() {
            return;
        }
        let buffer = std::mem::take(&mut g.buffer);
        let entries: Vec<GtbEntry> = buffer
            .iter()
            .map(|n| GtbEntry { id: n.id, significance: n.significance, has_approx: n.has_approx })
            .collect();
        let decisions = gtb_flush(&entries, g.ratio, &mut g.quota);
        for (node, d) in buffer.into_iter().zip(decisions) {
            self.issue(node, d);
        }
    }

    /// Waits for every spawned task, flushing all buffers first.
    pub fn wait_all(&mut self) -> Result<(), RuntimeError> {
        for gi in 0..self.groups.len() {
            self.flush(gi);
        }
        let shared = self.shared.clone();
        block_until(&shared, || shared.outstanding.load(Ordering::SeqCst) == 0);
        for gi in 0..self.groups.len() {
            self.end_epoch(gi);
        }
        self.regions.clear();
        self.collect();
        self.check_panics()
    }

    /// Waits for one group's tasks. `new_ratio` replaces the group's ratio
    /// for tasks spawned after the barrier.
    pub fn wait_group(&mut self, group: GroupId, new_ratio: Option<f64>) -> Result<(), RuntimeError> {
        let gi = group.0 as usize;
        if gi >= self.groups.len() {
            return Err(RuntimeError::UnknownGroup(group.0));
        }
        if let Some(r) = new_ratio {
            check_ratio(r)?;
        }
        self.flush(gi);
        // Buffered tasks of other groups that someone depends on could stall
        // this barrier; issue them now.
        for other in 0..self.groups.len() {
            if other != gi && self.groups[other].buffer.iter().any(|n| n.has_successors()) {
                self.flush(other);
            }
        }
        let counters = self.groups[gi].counters.clone();
        block_until(&self.shared, || {
            counters.resolved.load(Ordering::SeqCst) == counters.created.load(Ordering::SeqCst)
        });
        self.end_epoch(gi);
        if let Some(r) = new_ratio {
            self.groups[gi].ratio = r;
        }
        self.collect();
        self.check_panics()
    }

    fn end_epoch(&mut self, gi: usize) {
        let g = &mut self.groups[gi];
        if g.spawned_in_epoch > 0 {
            g.epoch += 1;
        }
        g.spawned_in_epoch = 0;
        g.quota = GtbQuota::default();
    }

    fn collect(&mut self) {
        for slot in &self.shared.records {
            self.log.append(&mut slot.lock().unwrap());
        }
    }

    fn check_panics(&mut self) -> Result<(), RuntimeError> {
        let total = self.shared.panicked.load(Ordering::SeqCst);
        if total > self.panics_reported {
            let fresh = total - self.panics_reported;
            self.panics_reported = total;
            return Err(RuntimeError::TaskPanicked(fresh));
        }
        Ok(())
    }

    /// Records merged at the barriers so far, sorted by task id.
    pub fn take_records(&mut self) -> Vec<ExecutionRecord> {
        let mut log = std::mem::take(&mut self.log);
        log.sort_by_key(|r| r.id);
        log
    }

    /// Drains outstanding work and stops the workers. Further spawns fail.
    pub fn shutdown(&mut self) -> Result<(), RuntimeError> {
        if self.shut_down {
            return Ok(());
        }
        let drained = self.wait_all();
        self.shut_down = true;
        self.shared.shutdown.store(true, Ordering::SeqCst);
        {
            let _g = self.shared.sleep_lock.lock().unwrap();
            self.shared.sleep_cv.notify_all();
        }
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
        drained
    }
}

impl Drop for Runtime {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}

fn block_until(shared: &Shared, cond: impl Fn() -> bool) {
    for _ in 0..shared.spin_limit {
        if cond() {
            return;
        }
        std::thread::yield_now();
    }
    shared.master_waiting.store(true, Ordering::SeqCst);
    let mut guard = shared.wait_lock.lock().unwrap();
    while !cond() {
        guard = shared.wait_cv.wait(guard).unwrap();
    }
    drop(guard);
    shared.master_waiting.store(false, Ordering::SeqCst);
}

fn add_edge(pred: &Arc<TaskNode>, succ: &Arc<TaskNode>) {
    if Arc::ptr_eq(pred, succ) {
        return;
    }
    let mut deps = pred.deps.lock().unwrap();
    if !deps.done {
        succ.pending.fetch_add(1, Ordering::AcqRel);
        deps.successors.push(succ.clone());
    }
}

/// Last-writer serialization: a reader waits for the last writer, a writer
/// waits for the last writer and every reader since.
fn link(regions: &mut HashMap<RegionId, RegionState>, node: &Arc<TaskNode>, inputs: &[RegionId], outputs: &[RegionId]) {
    for r in inputs {
        let st = regions.entry(*r).or_default();
        if let Some(w) = &st.last_writer {
            add_edge(w, node);
        }
        st.readers.push(node.clone());
        if st.readers.len() >= st.prune_at.max(READER_PRUNE_MIN) {
            st.readers.retain(|n| !n.is_done());
            st.prune_at = 2 * st.readers.len();
        }
    }
    for r in outputs {
        let st = regions.entry(*r).or_default();
        if let Some(w) = &st.last_writer {
            add_edge(w, node);
        }
        for reader in st.readers.drain(..) {
            add_edge(&reader, node);
        }
        st.prune_at = 0;
        st.last_writer = Some(node.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    fn sig(v: f64) -> Significance {
        Significance::new(v).unwrap()
    }

    #[test]
    fn zero_workers_rejected() {
        assert_eq!(Runtime::new(0, PolicyConfig::Agnostic).err(), Some(ConfigError::NoWorkers));
        assert_eq!(
            Runtime::new(2, PolicyConfig::gtb(BufferSize::Bounded(0))).err(),
            Some(ConfigError::EmptyBuffer)
        );
    }

    #[test]
    fn group_ratio_validation_and_reinit() {
        let mut rt = Runtime::new(1, PolicyConfig::Agnostic).unwrap();
        assert!(rt.init_group("g", 1.5).is_err());
        let g = rt.init_group("sobel", 0.35).unwrap();
        assert_eq!(rt.init_group("sobel", 0.5).unwrap(), g);
        assert_eq!(rt.group_ratio(g).unwrap(), 0.5);
        assert_eq!(rt.group_name(g).unwrap(), "sobel");
    }

    #[test]
    fn unknown_group_and_shutdown_errors() {
        let mut rt = Runtime::new(1, PolicyConfig::Agnostic).unwrap();
        let bogus = GroupId(9);
        assert_eq!(rt.spawn(Task::new(bogus, sig(0.5), (), |_| {})).err(), Some(RuntimeError::UnknownGroup(9)));
        assert_eq!(rt.wait_group(bogus, None).err(), Some(RuntimeError::UnknownGroup(9)));
        let g = rt.init_group("g", 1.0).unwrap();
        rt.shutdown().unwrap();
        assert_eq!(rt.spawn(Task::new(g, sig(0.5), (), |_| {})).err(), Some(RuntimeError::ShutDown));
    }

    #[test]
    fn empty_barriers_return() {
        let mut rt = Runtime::new(2, PolicyConfig::lqh()).unwrap();
        rt.wait_all().unwrap();
        let g = rt.init_group("g", 0.5).unwrap();
        rt.wait_group(g, None).unwrap();
        assert!(rt.take_records().is_empty());
    }

    #[test]
    fn wait_group_rejects_bad_ratio() {
        let mut rt = Runtime::new(1, PolicyConfig::Agnostic).unwrap();
        let g = rt.init_group("g", 0.5).unwrap();
        assert!(matches!(rt.wait_group(g, Some(2.0)), Err(RuntimeError::Config(_))));
    }

    #[test]
    fn reinit_busy_group_fails() {
        let mut rt = Runtime::new(1, PolicyConfig::gtb(BufferSize::Max)).unwrap();
        let g = rt.init_group("g", 0.5).unwrap();
        rt.spawn(Task::new(g, sig(0.5), (), |_| {})).unwrap();
        assert!(matches!(rt.init_group("g", 0.2), Err(RuntimeError::GroupBusy(_))));
        rt.wait_group(g, None).unwrap();
        rt.init_group("g", 0.2).unwrap();
    }

    #[test]
    fn round_robin_queue_pattern() {
        let mut rt = Runtime::new(4, PolicyConfig::Agnostic).unwrap();
        let g = rt.init_group("g", 1.0).unwrap();
        for _ in 0..8 {
            rt.spawn(Task::new(g, sig(0.5), (), |_| {})).unwrap();
        }
        rt.wait_all().unwrap();
        let queues: Vec<_> = rt.take_records().iter().map(|r| r.queue.unwrap()).collect();
        assert_eq!(queues, vec![0, 1, 2, 3, 0, 1, 2, 3]);
    }

    #[test]
    fn round_robin_skips_dropped_tasks() {
        let mut rt = Runtime::new(2, PolicyConfig::gtb(BufferSize::Max)).unwrap();
        let g = rt.init_group("g", 0.5).unwrap();
        for i in 0..4 {
            let s = if i % 2 == 0 { 0.9 } else { 0.1 };
            rt.spawn(Task::new(g, sig(s), (), |_| {})).unwrap();
        }
        rt.wait_all().unwrap();
        let recs = rt.take_records();
        let queues: Vec<_> = recs.iter().map(|r| r.queue).collect();
        assert_eq!(queues, vec![Some(0), None, Some(1), None]);
        assert_eq!(recs[1].decision, ExecutionDecision::Dropped);
    }

    #[test]
    fn dropped_task_releases_dependent() {
        let mut rt = Runtime::new(2, PolicyConfig::gtb(BufferSize::Max)).unwrap();
        let g = rt.init_group("g", 0.5).unwrap();
        let r = RegionId::named("x");
        let ran = Arc::new(AtomicU32::new(0));
        let a = ran.clone();
        rt.spawn(Task::new(g, sig(0.1), (), move |_| {
            a.fetch_add(1, Ordering::SeqCst);
        }).writes(r))
        .unwrap();
        let b = ran.clone();
        rt.spawn(Task::new(g, sig(0.9), (), move |_| {
            b.fetch_add(10, Ordering::SeqCst);
        }).reads(r))
        .unwrap();
        rt.wait_all().unwrap();
        assert_eq!(ran.load(Ordering::SeqCst), 10);
        let recs = rt.take_records();
        assert_eq!(recs[0].decision, ExecutionDecision::Dropped);
        assert_eq!(recs[1].decision, ExecutionDecision::Accurate);
    }

    #[test]
    fn panicking_body_does_not_hang_barrier() {
        let mut rt = Runtime::new(2, PolicyConfig::Agnostic).unwrap();
        let g = rt.init_group("g", 1.0).unwrap();
        let done = Arc::new(AtomicU32::new(0));
        for i in 0..10 {
            let d = done.clone();
            rt.spawn(Task::new(g, sig(0.5), i, move |i| {
                if i == 3 {
                    panic!("boom");
                }
                d.fetch_add(1, Ordering::SeqCst);
            }))
            .unwrap();
        }
        assert_eq!(rt.wait_all(), Err(RuntimeError::TaskPanicked(1)));
        assert_eq!(done.load(Ordering::SeqCst), 9);
        assert_eq!(rt.take_records().len(), 10);
        rt.wait_all().unwrap();
    }

    #[test]
    fn wait_group_leaves_other_groups_alone() {
        let mut rt = Runtime::new(2, PolicyConfig::gtb(BufferSize::Max)).unwrap();
        let a = rt.init_group("a", 1.0).unwrap();
        let b = rt.init_group("b", 1.0).unwrap();
        for _ in 0..5 {
            rt.spawn(Task::new(a, sig(0.5), (), |_| {})).unwrap();
            rt.spawn(Task::new(b, sig(0.5), (), |_| {})).unwrap();
        }
        rt.wait_group(a, None).unwrap();
        let recs = rt.take_records();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.group == a));
        rt.wait_all().unwrap();
        assert_eq!(rt.take_records().len(), 5);
    }

    #[test]
    fn cross_group_dependency_on_buffered_task() {
        let mut rt = Runtime::new(2, PolicyConfig::gtb(BufferSize::Max)).unwrap();
        let a = rt.init_group("a", 1.0).unwrap();
        let b = rt.init_group("b", 1.0).unwrap();
        let r = RegionId::named("shared");
        rt.spawn(Task::new(a, sig(0.5), (), |_| {}).writes(r)).unwrap();
        rt.spawn(Task::new(b, sig(0.5), (), |_| {}).reads(r)).unwrap();
        rt.wait_group(b, None).unwrap();
        rt.wait_all().unwrap();
        assert_eq!(rt.take_records().len(), 2);
    }

    #[test]
    fn epochs_advance_at_group_barriers() {
        let mut rt = Runtime::new(1, PolicyConfig::Agnostic).unwrap();
        let g = rt.init_group("g", 1.0).unwrap();
        rt.spawn(Task::new(g, sig(0.5), (), |_| {})).unwrap();
        rt.wait_group(g, Some(0.5)).unwrap();
        rt.spawn(Task::new(g, sig(0.5), (), |_| {})).unwrap();
        rt.wait_all().unwrap();
        let recs = rt.take_records();
        assert_eq!((recs[0].epoch, recs[0].ratio), (0, 1.0));
        assert_eq!((recs[1].epoch, recs[1].ratio), (1, 0.5));
    }
}
