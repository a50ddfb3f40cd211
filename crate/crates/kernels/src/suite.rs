//! Uniform entry points over all benchmarks: input generation, runs from a
//! preset or an explicit ratio, quality against a reference run, and file
//! output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sigrt::quality::relative_error;
use sigrt::Runtime;

use crate::alternating::{self, Particles};
use crate::dct::{self, DctPlanes};
use crate::jacobi::{self, JacobiOutput, JacobiParams, JacobiSystem};
use crate::kmeans::{self, KmeansInput, KmeansOutput};
use crate::mc::{self, McConfig, McOutput};
use crate::output::write_values_file;
use crate::{sobel, Benchmark, DegreePreset, ImageBuffer, KernelError, KernelParams, KernelRun};

pub const KMEANS_DIMS: usize = 16;
pub const KMEANS_CLUSTERS: usize = 4;
pub const ALTERNATING_STEPS: usize = 10;

#[derive(Clone, Debug)]
pub enum Input {
    Image(ImageBuffer),
    Mc(McConfig),
    Points(KmeansInput),
    System(JacobiSystem),
    Particles(Particles),
}

#[derive(Clone, Debug)]
pub enum Output {
    Sobel(ImageBuffer),
    Dct(DctPlanes),
    Mc(McOutput),
    Kmeans(KmeansOutput),
    Jacobi(JacobiOutput),
    Alternating(alternating::AlternatingOutput),
}

/// What to run: a preset, an explicit ratio (wins over the preset), or
/// neither for the fully accurate reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    pub preset: Option<DegreePreset>,
    pub ratio: Option<f64>,
    pub uniform: bool,
    pub seed: u64,
}

impl RunSpec {
    pub fn reference(seed: u64) -> Self {
        RunSpec { preset: None, ratio: None, uniform: false, seed }
    }

    pub fn preset(p: DegreePreset, seed: u64) -> Self {
        RunSpec { preset: Some(p), ratio: None, uniform: false, seed }
    }

    /// Ratio 1.0 with every task at the same significance.
    pub fn overhead(seed: u64) -> Self {
        RunSpec { preset: None, ratio: Some(1.0), uniform: true, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMetric {
    PsnrDb,
    RelativeErrorPct,
}

impl QualityMetric {
    pub fn name(self) -> &'static str {
        match self {
            QualityMetric::PsnrDb => "psnr_db",
            QualityMetric::RelativeErrorPct => "relative_error_pct",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quality {
    pub value: f64,
    pub metric: QualityMetric,
}

impl Quality {
    /// `self` is at least as good as `other` (higher PSNR, lower error).
    pub fn at_least(&self, other: &Quality) -> bool {
        match self.metric {
            QualityMetric::PsnrDb => self.value >= other.value,
            QualityMetric::RelativeErrorPct => self.value <= other.value,
        }
    }
}

impl Benchmark {
    pub fn default_size(self) -> usize {
        match self {
            Benchmark::Sobel | Benchmark::Dct | Benchmark::Jacobi => 512,
            Benchmark::Mc => 32,
            Benchmark::Kmeans => 50_000,
            Benchmark::Alternating => 8192,
        }
    }

    pub fn size_meaning(self) -> &'static str {
        match self {
            Benchmark::Sobel | Benchmark::Dct => "image side in pixels",
            Benchmark::Mc => "lattice intervals per side",
            Benchmark::Kmeans => "number of points",
            Benchmark::Jacobi => "system dimension",
            Benchmark::Alternating => "number of particles",
        }
    }

    pub fn generate(self, seed: u64, size: usize) -> Result<Input, KernelError> {
        if size == 0 {
            return Err(KernelError::Invalid("size must be positive".into()));
        }
        Ok(match self {
            Benchmark::Sobel | Benchmark::Dct => Input::Image(ImageBuffer::synthetic(seed, size, size)),
            Benchmark::Mc => Input::Mc(McConfig::new(size)),
            Benchmark::Kmeans => {
                Input::Points(KmeansInput::gaussian_mixture(seed, size, KMEANS_DIMS, KMEANS_CLUSTERS))
            }
            Benchmark::Jacobi => Input::System(JacobiSystem::random_decaying(seed, size)),
            Benchmark::Alternating => Input::Particles(Particles::random(seed, size)),
        })
    }

    /// Ratio the run requests (Jacobi: the post-warm-up ratio, always 1.0).
    pub fn requested_ratio(self, spec: &RunSpec) -> f64 {
        if self == Benchmark::Jacobi {
            return 1.0;
        }
        spec.ratio.or_else(|| spec.preset.and_then(|p| p.ratio(self))).unwrap_or(1.0)
    }

    pub fn jacobi_params(spec: &RunSpec) -> JacobiParams {
        match spec.preset {
            Some(p) if !spec.uniform => JacobiParams::preset(p),
            Some(p) => JacobiParams { uniform: true, ..JacobiParams::preset(p) },
            None => JacobiParams { uniform: spec.uniform, ..JacobiParams::native() },
        }
    }

    pub fn run(self, rt: &mut Runtime, input: &Input, spec: &RunSpec) -> Result<KernelRun<Output>, KernelError> {
        let params = KernelParams { ratio: self.requested_ratio(spec), uniform: spec.uniform, seed: spec.seed };
        let mismatch = || KernelError::Invalid(format!("input does not belong to {self}"));
        Ok(match (self, input) {
            (Benchmark::Sobel, Input::Image(img)) => wrap(sobel::run(rt, img, &params)?, Output::Sobel),
            (Benchmark::Dct, Input::Image(img)) => wrap(dct::run(rt, img, &params)?, Output::Dct),
            (Benchmark::Mc, Input::Mc(cfg)) => wrap(mc::run(rt, cfg, &params)?, Output::Mc),
            (Benchmark::Kmeans, Input::Points(pts)) => {
                wrap(kmeans::run(rt, pts, KMEANS_CLUSTERS, &params)?, Output::Kmeans)
            }
            (Benchmark::Jacobi, Input::System(sys)) => {
                wrap(jacobi::run(rt, sys, &Self::jacobi_params(spec))?, Output::Jacobi)
            }
            (Benchmark::Alternating, Input::Particles(p)) => {
                wrap(alternating::run(rt, p, ALTERNATING_STEPS, &params)?, Output::Alternating)
            }
            _ => return Err(mismatch()),
        })
    }
}

fn wrap<T>(run: KernelRun<T>, f: impl FnOnce(T) -> Output) -> KernelRun<Output> {
    KernelRun { output: f(run.output), elapsed: run.elapsed }
}

/// Reorders `cand` centroids to match `reference` greedily by distance, so
/// that label permutations do not count as error.
fn matched_centroids(reference: &KmeansOutput, cand: &KmeansOutput) -> Vec<f64> {
    let d = reference.d;
    let mut used = vec![false; cand.k];
    let mut out = Vec::with_capacity(reference.centroids.len());
    for r in reference.centroids.chunks_exact(d) {
        let best = (0..cand.k)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = kmeans::sq_euclidean(r, &cand.centroids[a * d..][..d]);
                let db = kmeans::sq_euclidean(r, &cand.centroids[b * d..][..d]);
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        used[best] = true;
        out.extend_from_slice(&cand.centroids[best * d..][..d]);
    }
    out
}

impl Output {
    pub fn benchmark(&self) -> Benchmark {
        match self {
            Output::Sobel(_) => Benchmark::Sobel,
            Output::Dct(_) => Benchmark::Dct,
            Output::Mc(_) => Benchmark::Mc,
            Output::Kmeans(_) => Benchmark::Kmeans,
            Output::Jacobi(_) => Benchmark::Jacobi,
            Output::Alternating(_) => Benchmark::Alternating,
        }
    }

    /// Quality of `self` relative to an accurate `reference` output.
    pub fn quality(&self, reference: &Output) -> Result<Quality, KernelError> {
        let psnr = |v| Quality { value: v, metric: QualityMetric::PsnrDb };
        let rel = |v| Quality { value: v, metric: QualityMetric::RelativeErrorPct };
        Ok(match (reference, self) {
            (Output::Sobel(r), Output::Sobel(c)) => psnr(r.psnr(c)?),
            (Output::Dct(r), Output::Dct(c)) => psnr(r.reconstruct().psnr(&c.reconstruct())?),
            (Output::Mc(r), Output::Mc(c)) => rel(relative_error(&r.values()?, &c.values()?)?),
            (Output::Kmeans(r), Output::Kmeans(c)) => rel(relative_error(&r.centroids, &matched_centroids(r, c))?),
            (Output::Jacobi(r), Output::Jacobi(c)) => rel(relative_error(&r.x, &c.x)?),
            (Output::Alternating(r), Output::Alternating(c)) => {
                rel(relative_error(&r.particles.pos, &c.particles.pos)?)
            }
            _ => return Err(KernelError::Invalid("quality needs outputs of the same benchmark".into())),
        })
    }

    /// Raw values for the binary dump.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Output::Sobel(img) => img.pixels.iter().map(|&p| p as f64).collect(),
            Output::Dct(p) => p.coeffs.clone(),
            Output::Mc(m) => m.estimates.iter().map(|e| e.unwrap_or(f64::NAN)).collect(),
            Output::Kmeans(k) => k.centroids.clone(),
            Output::Jacobi(j) => j.x.clone(),
            Output::Alternating(a) => a.particles.pos.clone(),
        }
    }

    pub fn metadata(&self) -> serde_json::Value {
        let mut meta = match self {
            Output::Sobel(img) => json!({"layout": "row-major pixels", "width": img.width, "height": img.height}),
            Output::Dct(p) => json!({
                "layout": "block coefficients in padded pixel grid",
                "width": p.width, "height": p.height,
                "padded_width": p.padded_width, "padded_height": p.padded_height,
            }),
            Output::Mc(m) => json!({"layout": "estimate per inner-boundary point, NaN if undefined", "points": m.points, "walks": m.walks}),
            Output::Kmeans(k) => json!({"layout": "row-major centroids", "k": k.k, "d": k.d, "iterations": k.iterations, "converged": k.converged}),
            Output::Jacobi(j) => json!({"layout": "solution vector", "sweeps": j.sweeps}),
            Output::Alternating(a) => json!({"layout": "particle positions", "ratios": a.ratios}),
        };
        meta["benchmark"] = json!(self.benchmark().name());
        meta
    }

    /// Writes `<stem>.bin` and, for image-like outputs, `<stem>.pgm`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, KernelError> {
        std::fs::create_dir_all(dir)?;
        let bin = dir.join(format!("{stem}.bin"));
        write_values_file(&bin, &self.metadata(), &self.values())?;
        let mut written = vec![bin];
        let image = match self {
            Output::Sobel(img) => Some(img.clone()),
            Output::Dct(p) => Some(p.reconstruct()),
            _ => None,
        };
        if let Some(img) = image {
            let pgm = dir.join(format!("{stem}.pgm"));
            std::fs::write(&pgm, img.to_pgm())?;
            written.push(pgm);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_ordering() {
        let a = Quality { value: 30.0, metric: QualityMetric::PsnrDb };
        let b = Quality { value: 20.0, metric: QualityMetric::PsnrDb };
        assert!(a.at_least(&b) && !b.at_least(&a));
        let e1 = Quality { value: 0.1, metric: QualityMetric::RelativeErrorPct };
        let e2 = Quality { value: 0.5, metric: QualityMetric::RelativeErrorPct };
        assert!(e1.at_least(&e2) && !e2.at_least(&e1));
    }

    #[test]
    fn requested_ratio_resolution() {
        let b = Benchmark::Sobel;
        assert_eq!(b.requested_ratio(&RunSpec::reference(0)), 1.0);
        assert_eq!(b.requested_ratio(&RunSpec::preset(DegreePreset::Medium, 0)), 0.3);
        let spec = RunSpec { ratio: Some(0.6), ..RunSpec::preset(DegreePreset::Medium, 0) };
        assert_eq!(b.requested_ratio(&spec), 0.6);
        assert_eq!(Benchmark::Jacobi.requested_ratio(&RunSpec::preset(DegreePreset::Aggressive, 0)), 1.0);
    }

    #[test]
    fn centroid_matching_undoes_permutation() {
        let r = KmeansOutput { k: 2, d: 1, centroids: vec![0.0, 10.0], assignments: vec![], iterations: 1, converged: true };
        let c = KmeansOutput { centroids: vec![10.5, 0.5], ..r.clone() };
        assert_eq!(matched_centroids(&r, &c), vec![0.5, 10.5]);
    }

    #[test]
    fn input_mismatch_is_an_error() {
        let mut rt = Runtime::new(1, sigrt::PolicyConfig::Agnostic).unwrap();
        let input = Benchmark::Mc.generate(0, 8).unwrap();
        assert!(Benchmark::Sobel.run(&mut rt, &input, &RunSpec::reference(0)).is_err());
    }
}
