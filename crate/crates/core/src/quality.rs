//! Output-quality and policy-fidelity metrics.
//!
//! All functions here are pure. Policy fidelity is accounted per group
//! epoch (one group between two of its barriers), since that is the scope
//! a ratio applies to.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::task::GroupId;
use crate::telemetry::ExecutionRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: reference {reference}, candidate {candidate}")]
    LengthMismatch { reference: usize, candidate: usize },
    #[error("reference has zero norm; relative error undefined")]
    ZeroReference,
    #[error("no groups to average over")]
    NoGroups,
    #[error("empty input")]
    Empty,
}

/// Peak value for 8-bit images.
pub const PSNR_PEAK: f64 = 255.0;

/// `10 * log10(255^2 / MSE)`; identical inputs give `+inf`.
pub fn psnr(reference: &[u8], candidate: &[u8]) -> Result<f64, MetricError> {
    if reference.len() != candidate.len() {
        return Err(MetricError::LengthMismatch { reference: reference.len(), candidate: candidate.len() });
    }
    if reference.is_empty() {
        return Err(MetricError::Empty);
    }
    let sse: f64 = reference
        .iter()
        .zip(candidate)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    let mse = sse / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PSNR_PEAK * PSNR_PEAK / mse).log10())
}

/// `100 * ||candidate - reference||_2 / ||reference||_2`, in percent.
pub fn relative_error(reference: &[f64], candidate: &[f64]) -> Result<f64, MetricError> {
    if reference.len() != candidate.len() {
        return Err(MetricError::LengthMismatch { reference: reference.len(), candidate: candidate.len() });
    }
    let norm: f64 = reference.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(MetricError::ZeroReference);
    }
    let diff: f64 = reference.iter().zip(candidate).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    Ok(100.0 * diff / norm)
}

/// Mean over groups of `|requested_i - provided_i|`.
pub fn ratio_diff(requested: &[f64], provided: &[f64]) -> Result<f64, MetricError> {
    if requested.len() != provided.len() {
        return Err(MetricError::LengthMismatch { reference: requested.len(), candidate: provided.len() });
    }
    if requested.is_empty() {
        return Err(MetricError::NoGroups);
    }
    let sum: f64 = requested.iter().zip(provided).map(|(r, p)| (r - p).abs()).sum();
    Ok(sum / requested.len() as f64)
}

/// Fidelity of one group epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: GroupId,
    pub epoch: u32,
    pub requested: f64,
    pub tasks: usize,
    pub accurate: usize,
    pub approximate: usize,
    pub dropped: usize,
    /// Accurate fraction; dropped tasks count as non-accurate.
    pub provided: f64,
    pub inverted: usize,
    pub inversion_pct: f64,
}

/// Number of significance-inverted tasks in one group.
///
/// With `m` accurate tasks, an ideal assignment runs the `m` most
/// significant tasks accurately. Equal significances are interchangeable,
/// so there may be several ideal sets; the one overlapping the actual
/// accurate set most is used. Every accurate task outside it and every
/// ideal task left non-accurate counts as inverted. A group with a single
/// significance value therefore has no inversions whatever its ratio.
pub fn count_inversions(members: &[(f64, bool)]) -> usize {
    let m = members.iter().filter(|(_, a)| *a).count();
    if m == 0 || m == members.len() {
        return 0;
    }
    let mut sigs: Vec<f64> = members.iter().map(|(s, _)| *s).collect();
    sigs.sort_by(|a, b| b.total_cmp(a));
    let theta = sigs[m - 1];
    let above = sigs.iter().filter(|&&s| s > theta).count();
    let slots_at_theta = m - above;
    let acc_above = members.iter().filter(|&&(s, a)| a && s > theta).count();
    let acc_at = members.iter().filter(|&&(s, a)| a && s == theta).count();
    let overlap = acc_above + acc_at.min(slots_at_theta);
    2 * (m - overlap)
}

/// Tasks that are non-accurate while any strictly less significant task
/// was accurate, or accurate while any strictly more significant task was
/// not. Harsher than [`count_inversions`]: one early mistake marks every
/// task between the two significance values.
pub fn count_pairwise_inversions(members: &[(f64, bool)]) -> usize {
    let min_acc = members.iter().filter(|(_, a)| *a).map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
    let max_non = members.iter().filter(|(_, a)| !*a).map(|(s, _)| *s).fold(f64::NEG_INFINITY, f64::max);
    members
        .iter()
        .filter(|&&(s, a)| (!a && s > min_acc) || (a && s < max_non))
        .count()
}

fn by_group_epoch(records: &[ExecutionRecord]) -> BTreeMap<(GroupId, u32), Vec<&ExecutionRecord>> {
    let mut map: BTreeMap<(GroupId, u32), Vec<&ExecutionRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.group_epoch()).or_default().push(r);
    }
    map
}

/// Per group epoch statistics, ordered by group then epoch.
pub fn group_stats(records: &[ExecutionRecord]) -> Vec<GroupStats> {
    by_group_epoch(records)
        .into_iter()
        .map(|((group, epoch), members)| {
            let tasks = members.len();
            let count = |d| members.iter().filter(|r| r.decision == d).count();
            let accurate = count(crate::ExecutionDecision::Accurate);
            let pairs: Vec<(f64, bool)> =
                members.iter().map(|r| (r.significance.value(), r.decision.is_accurate())).collect();
            let inverted = count_inversions(&pairs);
            GroupStats {
                group,
                epoch,
                requested: members[0].ratio,
                tasks,
                accurate,
                approximate: count(crate::ExecutionDecision::Approximate),
                dropped: count(crate::ExecutionDecision::Dropped),
                provided: accurate as f64 / tasks as f64,
                inverted,
                inversion_pct: 100.0 * inverted as f64 / tasks as f64,
            }
        })
        .collect()
}

/// Inversion percentage per group epoch, averaged over group epochs.
/// Zero when there are no records.
pub fn inversion_percent(records: &[ExecutionRecord]) -> f64 {
    let stats = group_stats(records);
    if stats.is_empty() {
        return 0.0;
    }
    stats.iter().map(|s| s.inversion_pct).sum::<f64>() / stats.len() as f64
}

/// Same averaging as [`inversion_percent`] with the pairwise count.
pub fn pairwise_inversion_percent(records: &[ExecutionRecord]) -> f64 {
    let groups = by_group_epoch(records);
    if groups.is_empty() {
        return 0.0;
    }
    let total: f64 = groups
        .values()
        .map(|m| {
            let pairs: Vec<(f64, bool)> = m.iter().map(|r| (r.significance.value(), r.decision.is_accurate())).collect();
            100.0 * count_pairwise_inversions(&pairs) as f64 / m.len() as f64
        })
        .sum();
    total / groups.len() as f64
}

/// [`ratio_diff`] over the group epochs found in `records`.
pub fn records_ratio_diff(records: &[ExecutionRecord]) -> Result<f64, MetricError> {
    let stats = group_stats(records);
    let requested: Vec<f64> = stats.iter().map(|s| s.requested).collect();
    let provided: Vec<f64> = stats.iter().map(|s| s.provided).collect();
    ratio_diff(&requested, &provided)
}

/// Median of a sample; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}
