//! Benchmark kernels written against the `sigrt` task runtime: each one
//! spawns tasks with significance values and optional approximate bodies,
//! and exposes input generators and degree presets.

use std::time::Duration;

mod error;
mod image;
mod preset;
mod slots;

pub mod alternating;
pub mod dct;
pub mod jacobi;
pub mod kmeans;
pub mod mc;
pub mod output;
pub mod sobel;
pub mod suite;

pub use error::KernelError;
pub use image::ImageBuffer;
pub use preset::{Benchmark, DegreePreset, KernelParams, JACOBI_NATIVE_TOLERANCE};
pub use suite::{Input, Output, Quality, QualityMetric, RunSpec};

/// Kernel result plus the time between the first spawn and the final barrier.
#[derive(Clone, Debug)]
pub struct KernelRun<T> {
    pub output: T,
    pub elapsed: Duration,
}

impl From<sigrt::ConfigError> for KernelError {
    fn from(e: sigrt::ConfigError) -> Self {
        KernelError::Runtime(e.into())
    }
}
