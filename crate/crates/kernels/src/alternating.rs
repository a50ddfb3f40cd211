//! Particle time stepping where the group ratio alternates between 1.0 on
//! odd steps and a reduced value on even steps.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sigrt::{ExecutionDecision, ExecutionRecord, GroupId, RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{KernelError, KernelParams, KernelRun};

pub const CHUNK: usize = 64;
const DT: f64 = 0.01;
const SUBSTEPS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Particles {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
}

impl Particles {
    pub fn random(seed: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Particles {
            pos: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            vel: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternatingOutput {
    pub particles: Particles,
    pub group: GroupId,
    /// Ratio requested for each step (1-based step `i` at index `i-1`).
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepTrace {
    pub step: usize,
    pub ratio: f64,
    pub tasks: usize,
    pub accurate: usize,
    pub approximate: usize,
    pub dropped: usize,
    pub accurate_fraction: f64,
}

fn force(x: f64) -> f64 {
    -x - 0.3 * (3.0 * x).sin()
}

fn step_accurate(pos: &mut [f64], vel: &mut [f64]) {
    let h = DT / SUBSTEPS as f64;
    for (x, v) in pos.iter_mut().zip(vel.iter_mut()) {
        for _ in 0..SUBSTEPS {
            *v += h * force(*x);
            *x += h * *v;
        }
    }
}

fn step_approximate(pos: &mut [f64], vel: &mut [f64]) {
    for (x, v) in pos.iter_mut().zip(vel.iter_mut()) {
        *v += DT * force(*x);
        *x += DT * *v;
    }
}

pub fn step_ratio(step: usize, r: f64) -> f64 {
    if step % 2 == 1 {
        1.0
    } else {
        r
    }
}

/// Runs `steps` time steps in group `"alternating"`; `params.ratio` is the
/// ratio used on even steps.
pub fn run(rt: &mut Runtime, init: &Particles, steps: usize, params: &KernelParams) -> Result<KernelRun<AlternatingOutput>, KernelError> {
    if steps < 2 {
        return Err(KernelError::Invalid(format!("need at least 2 steps, got {steps}")));
    }
    let n = init.pos.len();
    if init.vel.len() != n {
        return Err(KernelError::Dimension("positions and velocities differ in length".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let state: Slots<(Vec<f64>, Vec<f64>)> = Slots::new(chunks, |c| {
        let r = c * CHUNK..((c + 1) * CHUNK).min(n);
        (init.pos[r.clone()].to_vec(), init.vel[r].to_vec())
    });
    let region = RegionId::named("alternating.state");
    let g = rt.init_group("alternating", step_ratio(1, params.ratio))?;
    let mut ratios = Vec::with_capacity(steps);

    let start = Instant::now();
    for step in 1..=steps {
        ratios.push(step_ratio(step, params.ratio));
        for c in 0..chunks {
            let s = if params.uniform { 0.5 } else { 0.1 + 0.8 * (((c + step) * 7) % 9) as f64 / 8.0 };
            let (a, b) = (state.clone(), state.clone());
            let task = Task::new(g, Significance::new(s)?, c, move |c| {
                let mut st = a.lock(c);
                let (p, v) = &mut *st;
                step_accurate(p, v);
            })
            .approx(move |c| {
                let mut st = b.lock(c);
                let (p, v) = &mut *st;
                step_approximate(p, v);
            })
            .writes(region.part(c as u64));
            rt.spawn(task)?;
        }
        rt.wait_group(g, Some(step_ratio(step + 1, params.ratio)))?;
    }
    let elapsed = start.elapsed();

    let mut particles = Particles { pos: Vec::with_capacity(n), vel: Vec::with_capacity(n) };
    for c in 0..chunks {
        let st = state.lock(c);
        particles.pos.extend_from_slice(&st.0);
        particles.vel.extend_from_slice(&st.1);
    }
    Ok(KernelRun { output: AlternatingOutput { particles, group: g, ratios }, elapsed })
}

/// Per-step decision summary for `group`, read from execution records.
pub fn trace(records: &[ExecutionRecord], group: GroupId) -> Vec<StepTrace> {
    let mut by_epoch: BTreeMap<u32, StepTrace> = BTreeMap::new();
    for r in records.iter().filter(|r| r.group == group) {
        let t = by_epoch.entry(r.epoch).or_insert_with(|| StepTrace {
            step: 0,
            ratio: r.ratio,
            tasks: 0,
            accurate: 0,
            approximate: 0,
            dropped: 0,
            accurate_fraction: 0.0,
        });
        t.tasks += 1;
        match r.decision {
            ExecutionDecision::Accurate => t.accurate += 1,
            ExecutionDecision::Approximate => t.approximate += 1,
            ExecutionDecision::Dropped => t.dropped += 1,
        }
    }
    by_epoch
        .into_values()
        .enumerate()
        .map(|(i, mut t)| {
            t.step = i + 1;
            t.accurate_fraction = t.accurate as f64 / t.tasks as f64;
            t
        })
        .collect()
}
