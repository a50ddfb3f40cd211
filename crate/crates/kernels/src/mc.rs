//! Monte Carlo solution of the Laplace equation on the unit square,
//! estimated at lattice points on the boundary of the inner square
//! `[1/4, 3/4]^2`. Each point gets `batches` tasks of `walks` random walks.
//!
//! Even batches carry a walk-on-spheres approximate body; odd batches have
//! none and are dropped when the runtime does not run them accurately.

use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigrt::{RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{KernelError, KernelParams, KernelRun};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    /// `g(x, y) = 1 + x^2 - y^2` (harmonic, so it is also the exact solution).
    Harmonic,
    Constant(f64),
}

impl Boundary {
    pub fn value(self, x: f64, y: f64) -> f64 {
        match self {
            Boundary::Harmonic => 1.0 + x * x - y * y,
            Boundary::Constant(c) => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    /// Lattice intervals per side; must be a positive multiple of 4.
    pub grid: usize,
    pub walks: usize,
    pub batches: usize,
    pub boundary: Boundary,
    /// Stopping distance of the walk-on-spheres body.
    pub epsilon: f64,
}

impl McConfig {
    pub fn new(grid: usize) -> Self {
        McConfig { grid, walks: 128, batches: 8, boundary: Boundary::Harmonic, epsilon: 1e-3 }
    }

    fn validate(&self) -> Result<(), KernelError> {
        if self.grid < 4 || !self.grid.is_multiple_of(4) {
            return Err(KernelError::Invalid(format!("grid {} must be a positive multiple of 4", self.grid)));
        }
        if self.walks == 0 || self.batches == 0 {
            return Err(KernelError::Invalid("walks and batches must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(KernelError::Invalid(format!("epsilon {} out of range", self.epsilon)));
        }
        Ok(())
    }

    /// Lattice coordinates of the inner-square boundary points.
    pub fn points(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = (self.grid / 4, 3 * self.grid / 4);
        let mut pts = Vec::new();
        for i in lo..hi {
            pts.push((i, lo));
        }
        for j in lo..hi {
            pts.push((hi, j));
        }
        for i in (lo + 1..=hi).rev() {
            pts.push((i, hi));
        }
        for j in (lo + 1..=hi).rev() {
            pts.push((lo, j));
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McOutput {
    /// Point positions in the unit square.
    pub points: Vec<(f64, f64)>,
    /// `None` where every walk for the point was dropped.
    pub estimates: Vec<Option<f64>>,
    pub walks: Vec<u64>,
}

impl McOutput {
    /// Estimates as a dense vector, failing if any point is undefined.
    pub fn values(&self) -> Result<Vec<f64>, KernelError> {
        let missing = self.estimates.iter().filter(|e| e.is_none()).count();
        if missing > 0 {
            return Err(KernelError::UndefinedEstimate(missing));
        }
        Ok(self.estimates.iter().map(|e| e.unwrap()).collect())
    }
}

pub fn task_significance(point: usize, batch: usize) -> f64 {
    0.1 + 0.8 * ((point * 7 + batch * 4) % 9) as f64 / 8.0
}

/// Per-task RNG: run seed xor task index.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

/// Nearest-neighbour lattice walks. Returns the sum of boundary values hit.
pub fn lattice_walks(cfg: &McConfig, start: (usize, usize), walks: usize, rng: &mut impl Rng) -> f64 {
    let n = cfg.grid as i64;
    let h = 1.0 / cfg.grid as f64;
    let mut sum = 0.0;
    for _ in 0..walks {
        let (mut i, mut j) = (start.0 as i64, start.1 as i64);
        while i > 0 && i < n && j > 0 && j < n {
            match rng.random_range(0..4u8) {
                0 => i += 1,
                1 => i -= 1,
                2 => j += 1,
                _ => j -= 1,
            }
        }
        sum += cfg.boundary.value(i as f64 * h, j as f64 * h);
    }
    sum
}

/// Walk-on-spheres: jumps to a random point on the largest circle inside
/// the square, stops within `epsilon` of the boundary and projects onto it.
pub fn sphere_walks(cfg: &McConfig, start: (f64, f64), walks: usize, rng: &mut impl Rng) -> f64 {
    let mut sum = 0.0;
    for _ in 0..walks {
        let (mut x, mut y) = start;
        loop {
            let d = x.min(1.0 - x).min(y).min(1.0 - y);
            if d < cfg.epsilon {
                break;
            }
            let theta = rng.random::<f64>() * TAU;
            x += d * theta.cos();
            y += d * theta.sin();
        }
        let (dx0, dx1, dy0, dy1) = (x, 1.0 - x, y, 1.0 - y);
        let m = dx0.min(dx1).min(dy0).min(dy1);
        let (px, py) = if m == dx0 {
            (0.0, y)
        } else if m == dx1 {
            (1.0, y)
        } else if m == dy0 {
            (x, 0.0)
        } else {
            (x, 1.0)
        };
        sum += cfg.boundary.value(px, py);
    }
    sum
}

/// Estimates in group `"mc"`.
pub fn run(rt: &mut Runtime, cfg: &McConfig, params: &KernelParams) -> Result<KernelRun<McOutput>, KernelError> {
    cfg.validate()?;
    let cfg = *cfg;
    let pts = cfg.points();
    let h = 1.0 / cfg.grid as f64;
    let slots: Slots<(f64, u64)> = Slots::new(pts.len() * cfg.batches, |_| (0.0, 0));
    let seed = params.seed;
    let dst = RegionId::named("mc.out");
    let g = rt.init_group("mc", params.ratio)?;
    let cfg_arc = Arc::new(cfg);

    let start = Instant::now();
    for (p, &pt) in pts.iter().enumerate() {
        for b in 0..cfg.batches {
            let idx = p * cfg.batches + b;
            let s = if params.uniform { 0.5 } else { task_significance(p, b) };
            let (c, sl) = (cfg_arc.clone(), slots.clone());
            let task = Task::new(g, Significance::new(s)?, idx, move |idx| {
                let mut rng = task_rng(seed, idx as u64);
                *sl.lock(idx) = (lattice_walks(&c, pt, c.walks, &mut rng), c.walks as u64);
            })
            .writes(dst.part(idx as u64));
            if b % 2 == 0 {
                let (c, sl) = (cfg_arc.clone(), slots.clone());
                let origin = (pt.0 as f64 * h, pt.1 as f64 * h);
                rt.spawn(task.approx(move |idx| {
                    let mut rng = task_rng(seed, idx as u64);
                    *sl.lock(idx) = (sphere_walks(&c, origin, c.walks, &mut rng), c.walks as u64);
                }))?;
            } else {
                rt.spawn(task)?;
            }
        }
    }
    rt.wait_group(g, None)?;
    let elapsed = start.elapsed();

    let mut estimates = Vec::with_capacity(pts.len());
    let mut walks = Vec::with_capacity(pts.len());
    for p in 0..pts.len() {
        let (mut sum, mut count) = (0.0, 0u64);
        for b in 0..cfg.batches {
            let (s, c) = *slots.lock(p * cfg.batches + b);
            sum += s;
            count += c;
        }
        estimates.push((count > 0).then(|| sum / count as f64));
        walks.push(count);
    }
    debug_assert_eq!(slots.len(), pts.len() * cfg.batches);
    let points = pts.iter().map(|&(i, j)| (i as f64 * h, j as f64 * h)).collect();
    Ok(KernelRun { output: McOutput { points, estimates, walks }, elapsed })
}
