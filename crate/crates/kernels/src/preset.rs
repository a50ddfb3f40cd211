use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Tolerance the Jacobi solver uses when no approximation is requested.
pub const JACOBI_NATIVE_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Sobel,
    Dct,
    Mc,
    Kmeans,
    Jacobi,
    /// Synthetic time-stepping workload with alternating group ratios.
    Alternating,
}

impl Benchmark {
    /// The five evaluation benchmarks, in sweep order.
    pub const EVALUATED: [Benchmark; 5] =
        [Benchmark::Sobel, Benchmark::Dct, Benchmark::Mc, Benchmark::Kmeans, Benchmark::Jacobi];
    pub const ALL: [Benchmark; 6] = [
        Benchmark::Sobel,
        Benchmark::Dct,
        Benchmark::Mc,
        Benchmark::Kmeans,
        Benchmark::Jacobi,
        Benchmark::Alternating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sobel => "sobel",
            Benchmark::Dct => "dct",
            Benchmark::Mc => "mc",
            Benchmark::Kmeans => "kmeans",
            Benchmark::Jacobi => "jacobi",
            Benchmark::Alternating => "alternating",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Benchmark::Sobel => "3x3 Sobel edge detection, one task per row; approx: 6 taps, |gx|+|gy|",
            Benchmark::Dct => "8x8 block DCT, tasks per frequency band; non-accurate bands dropped",
            Benchmark::Mc => "Monte Carlo Laplace solver; approx: walk-on-spheres, some batches dropped",
            Benchmark::Kmeans => "k-means clustering; approx: L1 distance on 1/8 of the dimensions",
            Benchmark::Jacobi => "blocked Jacobi solver; off-band tiles dropped in the first sweeps",
            Benchmark::Alternating => "particle time stepping with ratio alternating between steps",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown benchmark '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreePreset {
    Mild,
    Medium,
    Aggressive,
}

impl DegreePreset {
    pub const ALL: [DegreePreset; 3] = [DegreePreset::Mild, DegreePreset::Medium, DegreePreset::Aggressive];

    pub fn name(self) -> &'static str {
        match self {
            DegreePreset::Mild => "mild",
            DegreePreset::Medium => "medium",
            DegreePreset::Aggressive => "aggressive",
        }
    }

    /// Requested accurate-task ratio. Jacobi has no ratio knob (see
    /// [`DegreePreset::jacobi_tolerance`]) and the alternating workload uses
    /// the ratio for its approximate steps.
    pub fn ratio(self, bench: Benchmark) -> Option<f64> {
        let r = match (bench, self) {
            (Benchmark::Sobel, DegreePreset::Mild) => 0.80,
            (Benchmark::Sobel, DegreePreset::Medium) => 0.30,
            (Benchmark::Sobel, DegreePreset::Aggressive) => 0.0,
            (Benchmark::Dct, DegreePreset::Mild) => 0.80,
            (Benchmark::Dct, DegreePreset::Medium) => 0.40,
            (Benchmark::Dct, DegreePreset::Aggressive) => 0.10,
            (Benchmark::Mc, DegreePreset::Mild) => 1.00,
            (Benchmark::Mc, DegreePreset::Medium) => 0.80,
            (Benchmark::Mc, DegreePreset::Aggressive) => 0.50,
            (Benchmark::Kmeans, DegreePreset::Mild) => 0.80,
            (Benchmark::Kmeans, DegreePreset::Medium) => 0.60,
            (Benchmark::Kmeans, DegreePreset::Aggressive) => 0.40,
            (Benchmark::Alternating, DegreePreset::Mild) => 0.75,
            (Benchmark::Alternating, DegreePreset::Medium) => 0.50,
            (Benchmark::Alternating, DegreePreset::Aggressive) => 0.25,
            (Benchmark::Jacobi, _) => return None,
        };
        Some(r)
    }

    pub fn jacobi_tolerance(self) -> f64 {
        match self {
            DegreePreset::Mild => 1e-4,
            DegreePreset::Medium => 1e-3,
            DegreePreset::Aggressive => 1e-2,
        }
    }
}

impl fmt::Display for DegreePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DegreePreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DegreePreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown preset '{s}' (expected mild, medium or aggressive)"))
    }
}

/// Knobs shared by the ratio-driven kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub ratio: f64,
    /// Give every task the same significance (overhead measurements).
    pub uniform: bool,
    pub seed: u64,
}

impl KernelParams {
    pub fn with_ratio(ratio: f64) -> Self {
        KernelParams { ratio, uniform: false, seed: 0 }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn uniform(mut self, uniform: bool) -> Self {
        self.uniform = uniform;
        self
    }
}
