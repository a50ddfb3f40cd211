//! Randomised scheduler stress run with an independent timestamp audit.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sigrt::{ExecutionDecision, ExecutionRecord, PolicyConfig, RegionId, Runtime, Significance, Task};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StressOutcome {
    pub tasks: usize,
    pub records: usize,
    /// Tasks whose body ran fewer times than their decision requires.
    pub lost: usize,
    /// Tasks whose body ran more than once, or ran although dropped.
    pub duplicated: usize,
    pub order_violations: usize,
    pub elapsed: Duration,
}

impl StressOutcome {
    pub fn clean(&self) -> bool {
        self.records == self.tasks && self.lost == 0 && self.duplicated == 0 && self.order_violations == 0
    }
}

struct Access {
    inputs: Vec<RegionId>,
    outputs: Vec<RegionId>,
}

/// Conflicting accesses to a region, taken in spawn order, must not
/// overlap in time: each must start after the previous conflicting one
/// ended. Returns the number of violating pairs.
pub fn audit(accesses: &[(Vec<RegionId>, Vec<RegionId>)], records: &[ExecutionRecord]) -> usize {
    #[derive(Default)]
    struct Track {
        writer: Option<usize>,
        readers: Vec<usize>,
    }
    let by_id: HashMap<u64, &ExecutionRecord> = records.iter().map(|r| (r.id.0, r)).collect();
    let before = |a: usize, b: usize| match (by_id.get(&(a as u64)), by_id.get(&(b as u64))) {
        (Some(x), Some(y)) => x.end_ns <= y.start_ns,
        _ => false,
    };
    let mut tracks: HashMap<RegionId, Track> = HashMap::new();
    let mut violations = 0;
    for (i, (inputs, outputs)) in accesses.iter().enumerate() {
        for r in inputs {
            let t = tracks.entry(*r).or_default();
            if let Some(w) = t.writer {
                violations += usize::from(w != i && !before(w, i));
            }
            t.readers.push(i);
        }
        for r in outputs {
            let t = tracks.entry(*r).or_default();
            if let Some(w) = t.writer {
                violations += usize::from(w != i && !before(w, i));
            }
            for &rd in &t.readers {
                violations += usize::from(rd != i && !before(rd, i));
            }
            t.readers.clear();
            t.writer = Some(i);
        }
    }
    violations
}

/// Spawns `n` tasks over two groups with random significance, random
/// read/write sets over 64 regions and optional approximate bodies, with
/// group barriers every 10 000 tasks and a final `wait_all`.
pub fn stress(seed: u64, n: usize, policy: PolicyConfig, workers: usize) -> Result<StressOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rt = Runtime::new(workers, policy)?;
    let groups = [rt.init_group("a", rng.random_range(0.0..=1.0))?, rt.init_group("b", rng.random_range(0.0..=1.0))?];
    let regions: Vec<RegionId> = (0..64).map(|i| RegionId::named("stress").part(i)).collect();
    let hits: Arc<Vec<AtomicU32>> = Arc::new((0..n).map(|_| AtomicU32::new(0)).collect());
    let mut accesses = Vec::with_capacity(n);
    let start = Instant::now();
    for i in 0..n {
        let acc = Access {
            inputs: (0..rng.random_range(0..3)).map(|_| regions[rng.random_range(0..64)]).collect(),
            outputs: (0..rng.random_range(0..2)).map(|_| regions[rng.random_range(0..64)]).collect(),
        };
        let g = groups[rng.random_range(0..2)];
        let s = Significance::new(rng.random_range(0..=100) as f64 / 100.0)?;
        let h = hits.clone();
        let task = Task::new(g, s, i, move |i: usize| {
            h[i].fetch_add(1, Ordering::Relaxed);
        })
        .reads_all(acc.inputs.iter().copied())
        .writes_all(acc.outputs.iter().copied());
        if rng.random_bool(0.5) {
            let h = hits.clone();
            rt.spawn(task.approx(move |i: usize| {
                h[i].fetch_add(1, Ordering::Relaxed);
            }))?;
        } else {
            rt.spawn(task)?;
        }
        accesses.push((acc.inputs, acc.outputs));
        if i % 10_000 == 9_999 {
            rt.wait_group(g, None)?;
        }
    }
    rt.wait_all()?;
    let elapsed = start.elapsed();
    let records = rt.take_records();
    rt.shutdown()?;

    let mut seen = vec![0u32; n];
    let mut decision = vec![None; n];
    for r in &records {
        if let Some(c) = seen.get_mut(r.id.0 as usize) {
            *c += 1;
            decision[r.id.0 as usize] = Some(r.decision);
        }
    }
    let (mut lost, mut duplicated) = (0, 0);
    for i in 0..n {
        let ran = hits[i].load(Ordering::Relaxed);
        let want = u32::from(decision[i] != Some(ExecutionDecision::Dropped));
        if seen[i] == 0 || ran < want {
            lost += 1;
        } else if seen[i] > 1 || ran > want {
            duplicated += 1;
        }
    }
    Ok(StressOutcome {
        tasks: n,
        records: records.len(),
        lost,
        duplicated,
        order_violations: audit(&accesses, &records),
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sigrt::{BufferSize, GroupId, TaskId};

    fn rec(id: u64, start: u64, end: u64) -> ExecutionRecord {
        ExecutionRecord {
            id: TaskId(id),
            group: GroupId(0),
            epoch: 0,
            significance: Significance::new(0.5).unwrap(),
            ratio: 1.0,
            has_approx: false,
            decision: ExecutionDecision::Accurate,
            worker: Some(0),
            queue: Some(0),
            start_ns: start,
            end_ns: end,
        }
    }

    #[test]
    fn audit_catches_overlap() {
        let r = RegionId::named("x");
        let acc = vec![(vec![], vec![r]), (vec![r], vec![])];
        assert_eq!(audit(&acc, &[rec(0, 0, 10), rec(1, 10, 20)]), 0);
        assert_eq!(audit(&acc, &[rec(0, 0, 10), rec(1, 5, 20)]), 1);
        // Two readers may overlap.
        let acc = vec![(vec![r], vec![]), (vec![r], vec![])];
        assert_eq!(audit(&acc, &[rec(0, 0, 10), rec(1, 5, 20)]), 0);
    }

    #[test]
    fn small_stress_is_clean() {
        let out = stress(3, 3000, PolicyConfig::gtb(BufferSize::Bounded(16)), 3).unwrap();
        assert!(out.clean(), "{out:?}");
    }
}
