//! Lloyd's k-means with one task per chunk of points per iteration. All
//! tasks share one significance; the approximate body assigns by L1
//! distance over the first `ceil(d/8)` dimensions.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sigrt::{RegionId, Runtime, Significance, Task};

use crate::slots::Slots;
use crate::{KernelError, KernelParams, KernelRun};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansInput {
    pub n: usize,
    pub d: usize,
    /// Row-major `n x d`.
    pub points: Vec<f64>,
}

impl KmeansInput {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Mixture of `clusters` unit-variance Gaussians. Centres lie on a
    /// circle of radius 10 in the first two coordinates (so the cheap
    /// distance can still tell them apart) and are uniform in the rest.
    pub fn gaussian_mixture(seed: u64, n: usize, d: usize, clusters: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres: Vec<Vec<f64>> = (0..clusters)
            .map(|c| {
                let a = std::f64::consts::TAU * c as f64 / clusters as f64 + 0.3;
                (0..d)
                    .map(|j| match j {
                        0 => 10.0 * a.cos(),
                        1 => 10.0 * a.sin(),
                        _ => rng.random_range(-5.0..5.0),
                    })
                    .collect()
            })
            .collect();
        let noise = Normal::new(0.0, 1.0).expect("unit normal");
        let mut points = Vec::with_capacity(n * d);
        for _ in 0..n {
            let c = &centres[rng.random_range(0..clusters)];
            points.extend(c.iter().map(|m| m + noise.sample(&mut rng)));
        }
        KmeansInput { n, d, points }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansOutput {
    pub k: usize,
    pub d: usize,
    /// Row-major `k x d`.
    pub centroids: Vec<f64>,
    pub assignments: Vec<u32>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn approx_dims(d: usize) -> usize {
    d.div_ceil(8)
}

pub fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[f64], d: usize) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    for (c, cen) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_euclidean(p, cen);
        if dist < best.0 {
            best = (dist, c as u32);
        }
    }
    best.1
}

fn nearest_cheap(p: &[f64], centroids: &[f64], d: usize, dims: usize) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    for (c, cen) in centroids.chunks_exact(d).enumerate() {
        let dist: f64 = p[..dims].iter().zip(&cen[..dims]).map(|(x, y)| (x - y).abs()).sum();
        if dist < best.0 {
            best = (dist, c as u32);
        }
    }
    best.1
}

/// k-means++ seeding.
pub fn init_centroids(input: &KmeansInput, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = input.point(rng.random_range(0..input.n)).to_vec();
    let mut dist: Vec<f64> = (0..input.n).map(|i| sq_euclidean(input.point(i), &centroids)).collect();
    while centroids.len() < k * input.d {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            dist.iter().position(|&w| {
                acc += w;
                acc > target
            })
            .unwrap_or(input.n - 1)
        } else {
            rng.random_range(0..input.n)
        };
        let c = input.point(pick).to_vec();
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_euclidean(input.point(i), &c));
        }
        centroids.extend(c);
    }
    centroids
}

#[derive(Default)]
struct ChunkResult {
    labels: Vec<u32>,
    sums: Vec<f64>,
    counts: Vec<u64>,
    accurate: bool,
}

fn process(input: &KmeansInput, range: std::ops::Range<usize>, centroids: &[f64], k: usize, cheap: bool) -> ChunkResult {
    let d = input.d;
    let dims = approx_dims(d);
    let mut r = ChunkResult { labels: Vec::with_capacity(range.len()), sums: vec![0.0; k * d], counts: vec![0; k], accurate: !cheap };
    for i in range {
        let p = input.point(i);
        let c = if cheap { nearest_cheap(p, centroids, d, dims) } else { nearest(p, centroids, d) };
        r.labels.push(c);
        r.counts[c as usize] += 1;
        for (s, x) in r.sums[c as usize * d..][..d].iter_mut().zip(p) {
            *s += x;
        }
    }
    r
}

pub fn chunk_size(n: usize, workers: usize) -> usize {
    n.div_ceil(8 * workers.max(1)).max(1)
}

/// Clusters in group `"kmeans"`, one barrier per iteration.
pub fn run(rt: &mut Runtime, input: &KmeansInput, k: usize, params: &KernelParams) -> Result<KernelRun<KmeansOutput>, KernelError> {
    let (n, d) = (input.n, input.d);
    if k == 0 {
        return Err(KernelError::NoClusters);
    }
    if k > n {
        return Err(KernelError::TooManyClusters { k, n });
    }
    if d == 0 || input.points.len() != n * d {
        return Err(KernelError::Dimension(format!("{} values for {n}x{d} points", input.points.len())));
    }
    let data = Arc::new(input.clone());
    let mut centroids = init_centroids(input, k, params.seed);
    let chunk = chunk_size(n, rt.workers());
    let chunks = n.div_ceil(chunk);
    let slots: Slots<ChunkResult> = Slots::new(chunks, |_| ChunkResult::default());
    let mut labels = vec![u32::MAX; n];
    let threshold = n as f64 / 1000.0;
    let (src, cen, dst) = (RegionId::named("kmeans.points"), RegionId::named("kmeans.centroids"), RegionId::named("kmeans.labels"));
    let g = rt.init_group("kmeans", params.ratio)?;
    let sig = Significance::new(0.5)?;

    let start = Instant::now();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let snapshot = Arc::new(centroids.clone());
        for c in 0..chunks {
            let range = c * chunk..((c + 1) * chunk).min(n);
            let (a_data, a_cen, a_slots) = (data.clone(), snapshot.clone(), slots.clone());
            let (b_data, b_cen, b_slots) = (data.clone(), snapshot.clone(), slots.clone());
            let task = Task::new(g, sig, range, move |r| {
                *a_slots.lock(c) = process(&a_data, r, &a_cen, k, false);
            })
            .approx(move |r| *b_slots.lock(c) = process(&b_data, r, &b_cen, k, true))
            .reads(src)
            .reads(cen)
            .writes(dst.part(c as u64));
            rt.spawn(task)?;
        }
        rt.wait_group(g, None)?;

        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0u64; k];
        let mut changed = 0usize;
        for c in 0..chunks {
            let res = std::mem::take(&mut *slots.lock(c));
            let base = c * chunk;
            for (off, &l) in res.labels.iter().enumerate() {
                if res.accurate && labels[base + off] != l {
                    changed += 1;
                }
                labels[base + off] = l;
            }
            for (s, x) in sums.iter_mut().zip(&res.sums) {
                *s += x;
            }
            for (s, x) in counts.iter_mut().zip(&res.counts) {
                *s += x;
            }
        }
        let old = std::mem::take(&mut centroids);
        centroids = sums;
        let mut taken = Vec::new();
        for j in 0..k {
            if counts[j] > 0 {
                for v in &mut centroids[j * d..(j + 1) * d] {
                    *v /= counts[j] as f64;
                }
            } else {
                // Re-seed from the point farthest from its current centroid.
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| {
                        let da = sq_euclidean(input.point(a), &old[labels[a] as usize * d..][..d]);
                        let db = sq_euclidean(input.point(b), &old[labels[b] as usize * d..][..d]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                taken.push(far);
                centroids[j * d..(j + 1) * d].copy_from_slice(input.point(far));
            }
        }
        if (changed as f64) < threshold {
            converged = true;
            break;
        }
    }
    let elapsed = start.elapsed();
    Ok(KernelRun {
        output: KmeansOutput { k, d, centroids, assignments: labels, iterations, converged },
        elapsed,
    })
}
