//! Accuracy-decision policies.
//!
//! Global Task Buffering (GTB) decides on the master thread when a group's
//! buffer is flushed. Local Queue History (LQH) decides on the worker right
//! before a task runs, from a histogram of significance levels that worker
//! has seen for the task's group. Perforation is the significance-blind
//! baseline and the oracle is the offline full-information assignment.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::error::ConfigError;
use crate::significance::{accurate_quota, Significance, LEVELS};
use crate::task::{ExecutionDecision, TaskId};
use crate::telemetry::{ExecutionRecord, GroupEpoch};

/// Default GTB buffer capacity per group.
pub const DEFAULT_BUFFER: usize = 32;

/// GTB buffer capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BufferSize {
    Bounded(usize),
    /// Buffer every task until the group's barrier.
    Max,
}

impl fmt::Display for BufferSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferSize::Bounded(n) => write!(f, "{n}"),
            BufferSize::Max => f.write_str("max"),
        }
    }
}

impl std::str::FromStr for BufferSize {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(BufferSize::Max);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(ConfigError::EmptyBuffer),
            Ok(n) => Ok(BufferSize::Bounded(n)),
            Err(_) => Err(ConfigError::InvalidValue { key: "buffer", value: s.to_string() }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyConfig {
    /// Every task runs its accurate body; significance is ignored.
    Agnostic,
    Gtb { buffer: BufferSize },
    Lqh {
        /// Split a histogram level that straddles the threshold so that the
        /// accurate count tracks the ratio. Off reproduces the bare rule.
        proportional_ties: bool,
    },
    /// Significance-blind stride dropping at the group's ratio.
    Perforation,
}

impl PolicyConfig {
    pub fn gtb(buffer: BufferSize) -> Self {
        PolicyConfig::Gtb { buffer }
    }

    pub fn lqh() -> Self {
        PolicyConfig::Lqh { proportional_ties: false }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            PolicyConfig::Gtb { buffer: BufferSize::Bounded(0) } => Err(ConfigError::EmptyBuffer),
            _ => Ok(()),
        }
    }

    /// Short stable name used in reports.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyConfig::Agnostic => f.write_str("agnostic"),
            PolicyConfig::Gtb { buffer } => write!(f, "gtb({buffer})"),
            PolicyConfig::Lqh { proportional_ties: false } => f.write_str("lqh"),
            PolicyConfig::Lqh { proportional_ties: true } => f.write_str("lqh(ties)"),
            PolicyConfig::Perforation => f.write_str("perforation"),
        }
    }
}

/// One buffered task as seen by the GTB selection step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtbEntry {
    pub id: TaskId,
    pub significance: Significance,
    pub has_approx: bool,
}

/// Running tally of one group's flushed windows since its last barrier.
///
/// Each window gets `ceil(R * flushed_so_far) - accurate_so_far` accurate
/// slots, so the group total stays within one task of `R * n` no matter
/// how many windows the group was split into.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GtbQuota {
    flushed: usize,
    accurate: usize,
}

impl GtbQuota {
    pub fn flushed(&self) -> usize {
        self.flushed
    }

    pub fn accurate(&self) -> usize {
        self.accurate
    }
}

/// Decides one flushed GTB window.
///
/// Tasks are ranked by significance (descending, ties to the lower id) and
/// the top slots are marked accurate. Forced significance values override
/// the ranking. Decisions are returned in window (spawn) order.
pub fn gtb_flush(window: &[GtbEntry], ratio: f64, quota: &mut GtbQuota) -> Vec<ExecutionDecision> {
    let n = window.len();
    let target = accurate_quota(ratio, quota.flushed + n);
    let slots = target.saturating_sub(quota.accurate).min(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        window[b]
            .significance
            .total_cmp(&window[a].significance)
            .then(window[a].id.cmp(&window[b].id))
    });

    let mut accurate = vec![false; n];
    for (rank, &i) in order.iter().enumerate() {
        let s = window[i].significance;
        accurate[i] = if s.is_forced_accurate() {
            true
        } else if s.is_forced_approximate() {
            false
        } else {
            rank < slots
        };
    }

    quota.flushed += n;
    quota.accurate += accurate.iter().filter(|&&a| a).count();
    window
        .iter()
        .zip(accurate)
        .map(|(e, a)| ExecutionDecision::from_accurate(a, e.has_approx))
        .collect()
}

/// Count of tasks seen at each of the 101 significance levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignificanceHistogram {
    counts: [u64; LEVELS],
    total: u64,
    accurate: u64,
}

impl Default for SignificanceHistogram {
    fn default() -> Self {
        SignificanceHistogram { counts: [0; LEVELS], total: 0, accurate: 0 }
    }
}

impl SignificanceHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tasks seen with significance level `<= level(s)`.
    pub fn cumulative(&self, s: Significance) -> u64 {
        self.counts[..=s.level().index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn accurate(&self) -> u64 {
        self.accurate
    }

    pub fn count_at(&self, s: Significance) -> u64 {
        self.counts[s.level().index()]
    }

    pub fn record(&mut self, s: Significance, accurate: bool) {
        self.counts[s.level().index()] += 1;
        self.total += 1;
        if accurate {
            self.accurate += 1;
        }
    }
}

/// LQH decision for a task of significance `s` in a group with ratio `ratio`.
///
/// Accurate iff `t(s) > (1 - ratio) * t(1.0)` over the history recorded so
/// far, then the task is added to the history. Forced significances and a
/// ratio of 1.0 bypass the rule. Returns `Accurate` or `Approximate`; the
/// caller demotes to `Dropped` when there is no approximate body.
pub fn lqh_decide(
    hist: &mut SignificanceHistogram,
    s: Significance,
    ratio: f64,
    proportional_ties: bool,
) -> ExecutionDecision {
    let accurate = if s.is_forced_approximate() {
        false
    } else if s.is_forced_accurate() || ratio >= 1.0 {
        true
    } else {
        let threshold = (1.0 - ratio) * hist.total as f64;
        let cum = hist.cumulative(s);
        let mut accurate = cum as f64 > threshold;
        if accurate && proportional_ties {
            let below = cum - hist.count_at(s);
            if below as f64 <= threshold {
                let quota = accurate_quota(ratio, hist.total as usize + 1) as u64;
                accurate = hist.accurate < quota;
            }
        }
        accurate
    };
    hist.record(s, accurate);
    if accurate {
        ExecutionDecision::Accurate
    } else {
        ExecutionDecision::Approximate
    }
}

/// Loop-perforation stride predicate for the `index`-th task of a group.
///
/// Accurate iff `floor(i * R) < floor((i + 1) * R)`; everything else is
/// dropped outright.
pub fn perforation_decide(index: u64, ratio: f64) -> ExecutionDecision {
    let lo = (index as f64 * ratio + 1e-9).floor();
    let hi = ((index + 1) as f64 * ratio + 1e-9).floor();
    if lo < hi {
        ExecutionDecision::Accurate
    } else {
        ExecutionDecision::Dropped
    }
}

/// Offline full-information assignment over finished records.
///
/// Within each group epoch the `ceil(R * n)` most significant tasks (ties
/// to the lower id) are accurate. Returned in input order.
pub fn oracle_assign(records: &[ExecutionRecord]) -> Vec<ExecutionDecision> {
    let mut by_group: HashMap<GroupEpoch, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        by_group.entry(r.group_epoch()).or_default().push(i);
    }
    let mut out = vec![ExecutionDecision::Accurate; records.len()];
    for members in by_group.values() {
        let mut ranked = members.clone();
        ranked.sort_by(|&a, &b| {
            let (ra, rb) = (&records[a], &records[b]);
            rb.significance.value().partial_cmp(&ra.significance.value()).unwrap().then(ra.id.cmp(&rb.id))
        });
        let keep = accurate_quota(records[members[0]].ratio, members.len());
        for (rank, &i) in ranked.iter().enumerate() {
            let r = &records[i];
            let accurate = match r.significance.value() {
                v if v >= 1.0 => true,
                v if v <= 0.0 => false,
                _ => rank < keep,
            };
            out[i] = ExecutionDecision::from_accurate(accurate, r.has_approx);
        }
    }
    out
}
