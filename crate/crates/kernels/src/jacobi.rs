//! Blocked Jacobi iteration. Each sweep has one task per `(row block,
//! column block)` tile computing off-diagonal partial products, and one
//! reduce task per row block. During the warm-up sweeps tiles far from the
//! diagonal get significance 0 and are dropped; their partial products keep
//! whatever the previous sweep left (zero at first).

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigrt::{GroupId, RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{DegreePreset, KernelError, KernelRun, JACOBI_NATIVE_TOLERANCE};

pub const MAX_SWEEPS: usize = 100_000;
pub const WARMUP_SWEEPS: usize = 5;
const MAX_BLOCKS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiSystem {
    pub n: usize,
    /// Row-major `n x n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl JacobiSystem {
    pub fn identity(b: Vec<f64>) -> Self {
        let n = b.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        JacobiSystem { n, a, b }
    }

    /// Random strictly dominant system whose off-diagonal magnitudes decay
    /// as `exp(-|i-j| / (n/16))`.
    pub fn random_decaying(seed: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (n as f64 / 16.0).max(1.0);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j {
                    let v = rng.random_range(-1.0..1.0) * (-((i as f64 - j as f64).abs()) / scale).exp();
                    a[i * n + j] = v;
                    off += v.abs();
                }
            }
            a[i * n + i] = 1.0 + 1.25 * off;
        }
        let b = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        JacobiSystem { n, a, b }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let n = self.n;
        if n == 0 || self.a.len() != n * n || self.b.len() != n {
            return Err(KernelError::Dimension(format!("matrix {} / rhs {} for n = {n}", self.a.len(), self.b.len())));
        }
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let off: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
            if row[i].abs().partial_cmp(&off) != Some(std::cmp::Ordering::Greater) {
                return Err(KernelError::NotDiagonallyDominant { row: i });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiParams {
    pub tolerance: f64,
    /// Sweeps during which off-band tiles are dropped; convergence is only
    /// checked afterwards.
    pub warmup: usize,
    pub uniform: bool,
}

impl JacobiParams {
    pub fn preset(p: DegreePreset) -> Self {
        JacobiParams { tolerance: p.jacobi_tolerance(), warmup: WARMUP_SWEEPS, uniform: false }
    }

    /// Native tolerance, no warm-up: the accurate baseline.
    pub fn native() -> Self {
        JacobiParams { tolerance: JACOBI_NATIVE_TOLERANCE, warmup: 0, uniform: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiOutput {
    pub x: Vec<f64>,
    pub sweeps: usize,
    /// `max |x_new - x_old|` after every sweep.
    pub history: Vec<f64>,
}

struct Layout {
    n: usize,
    bs: usize,
    blocks: usize,
    half_band: usize,
}

impl Layout {
    fn new(n: usize) -> Self {
        let bs = n.div_ceil(MAX_BLOCKS.min(n));
        Layout { n, bs, blocks: n.div_ceil(bs), half_band: (n / 8).max(1) }
    }

    fn range(&self, b: usize) -> std::ops::Range<usize> {
        b * self.bs..((b + 1) * self.bs).min(self.n)
    }

    /// Whether every entry of tile `(bi, bj)` lies farther than the
    /// half-bandwidth from the diagonal.
    fn off_band(&self, bi: usize, bj: usize) -> bool {
        let (r, c) = (self.range(bi), self.range(bj));
        let gap = if c.start >= r.end {
            c.start - (r.end - 1)
        } else if r.start >= c.end {
            r.start - (c.end - 1)
        } else {
            0
        };
        gap > self.half_band
    }
}

fn tile(sys: &JacobiSystem, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, x: &[f64]) -> Vec<f64> {
    let n = sys.n;
    rows.map(|i| {
        let row = &sys.a[i * n..(i + 1) * n];
        let mut s = 0.0;
        for j in cols.clone() {
            if j != i {
                s += row[j] * x[j];
            }
        }
        s
    })
    .collect()
}

/// Solves in group `"jacobi"` until successive iterates differ by less than
/// the tolerance (checked only after the warm-up sweeps).
pub fn run(rt: &mut Runtime, sys: &JacobiSystem, params: &JacobiParams) -> Result<KernelRun<JacobiOutput>, KernelError> {
    sys.validate()?;
    if params.tolerance.is_nan() || params.tolerance <= 0.0 {
        return Err(KernelError::Invalid(format!("tolerance {}", params.tolerance)));
    }
    let n = sys.n;
    let lay = Layout::new(n);
    let nb = lay.blocks;
    let system = Arc::new(sys.clone());
    let partial: Slots<Vec<f64>> = Slots::new(nb * nb, |k| vec![0.0; lay.range(k / nb).len()]);
    let next: Slots<Vec<f64>> = Slots::new(nb, |b| vec![0.0; lay.range(b).len()]);
    let xr = RegionId::named("jacobi.x");
    let pr = RegionId::named("jacobi.partial");

    let mut warm_tasks = 0usize;
    let mut warm_kept = 0usize;
    for bi in 0..nb {
        for bj in 0..nb {
            warm_tasks += 1;
            warm_kept += usize::from(!lay.off_band(bi, bj));
        }
    }
    warm_tasks += nb;
    warm_kept += nb;
    let warm_ratio = warm_kept as f64 / warm_tasks as f64;
    let ratio_for = |sweep: usize| if !params.uniform && sweep <= params.warmup { warm_ratio } else { 1.0 };
    let g: GroupId = rt.init_group("jacobi", ratio_for(1))?;

    let start = Instant::now();
    let mut x: Vec<f64> = (0..n).map(|i| sys.b[i] / sys.a[i * n + i]).collect();
    let mut history = Vec::new();
    let mut sweep = 0;
    loop {
        sweep += 1;
        if sweep > MAX_SWEEPS {
            return Err(KernelError::Diverged(MAX_SWEEPS));
        }
        let warm = !params.uniform && sweep <= params.warmup;
        let snapshot = Arc::new(x.clone());
        for bi in 0..nb {
            for bj in 0..nb {
                let s = if params.uniform {
                    0.5
                } else if warm && lay.off_band(bi, bj) {
                    0.0
                } else {
                    1.0
                };
                let (sys, xs, out) = (system.clone(), snapshot.clone(), partial.clone());
                let (rows, cols) = (lay.range(bi), lay.range(bj));
                let idx = bi * nb + bj;
                let task = Task::new(g, Significance::new(s)?, (rows, cols), move |(r, c)| {
                    *out.lock(idx) = tile(&sys, r, c, &xs);
                })
                .reads(xr.part(bj as u64))
                .writes(pr.part(idx as u64));
                rt.spawn(task)?;
            }
            let (sys, parts, dst) = (system.clone(), partial.clone(), next.clone());
            let rows = lay.range(bi);
            let s = if params.uniform { 0.5 } else { 1.0 };
            let task = Task::new(g, Significance::new(s)?, rows, move |rows| {
                let n = sys.n;
                let mut acc = vec![0.0; rows.len()];
                for bj in 0..nb {
                    for (a, p) in acc.iter_mut().zip(parts.lock(bi * nb + bj).iter()) {
                        *a += p;
                    }
                }
                let mut out = dst.lock(bi);
                for (k, i) in rows.enumerate() {
                    out[k] = (sys.b[i] - acc[k]) / sys.a[i * n + i];
                }
            })
            .reads_all((0..nb).map(|bj| pr.part((bi * nb + bj) as u64)))
            .writes(xr.part(bi as u64));
            rt.spawn(task)?;
        }
        rt.wait_group(g, Some(ratio_for(sweep + 1)))?;

        let mut diff = 0.0f64;
        for bi in 0..nb {
            let block = next.lock(bi);
            for (k, i) in lay.range(bi).enumerate() {
                diff = diff.max((block[k] - x[i]).abs());
                x[i] = block[k];
            }
        }
        history.push(diff);
        if !warm && diff < params.tolerance {
            break;
        }
        if !diff.is_finite() {
            return Err(KernelError::Diverged(sweep));
        }
    }
    let elapsed = start.elapsed();
    Ok(KernelRun { output: JacobiOutput { x, sweeps: sweep, history }, elapsed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_bands() {
        let lay = Layout::new(512);
        assert_eq!((lay.bs, lay.blocks, lay.half_band), (64, 8, 64));
        assert!(!lay.off_band(3, 4));
        assert!(lay.off_band(3, 5));
        assert!(lay.off_band(7, 0));
        let kept = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).filter(|&(i, j)| !lay.off_band(i, j)).count();
        assert_eq!(kept, 22);
        let small = Layout::new(5);
        assert_eq!((small.bs, small.blocks), (1, 5));
    }

    #[test]
    fn generated_systems_are_dominant() {
        for seed in 0..5 {
            JacobiSystem::random_decaying(seed, 64).validate().unwrap();
        }
    }

    #[test]
    fn rejects_non_dominant() {
        let sys = JacobiSystem { n: 2, a: vec![1.0, 2.0, 0.0, 1.0], b: vec![1.0, 1.0] };
        assert!(matches!(sys.validate(), Err(KernelError::NotDiagonallyDominant { row: 0 })));
        let mut rt = Runtime::new(1, sigrt::PolicyConfig::Agnostic).unwrap();
        assert!(run(&mut rt, &sys, &JacobiParams::native()).is_err());
        assert_eq!(rt.spawned(), 0);
    }
}
