use serde::{Serialize, Serializer};
use sigrt::quality::GroupStats;

use crate::config::RunConfig;

pub const ENERGY_NOTE: &str = "energy is not measured; wall-clock time and the accurate-task fraction are reported as proxies";

/// JSON has no infinity; an exact reproduction has infinite PSNR.
fn finite_or_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SelfCheck {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        SelfCheck { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskCounts {
    pub total: usize,
    pub accurate: usize,
    pub approximate: usize,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub version: String,
    pub benchmark: String,
    pub policy: String,
    /// Preset name, or `custom` when a ratio override was given, or
    /// `accurate` for a plain reference run.
    pub preset: String,
    pub size: usize,
    pub workers: usize,
    pub seed: u64,
    /// Task-weighted mean of the ratios the group epochs requested.
    pub requested_ratio: f64,
    /// Fraction of all tasks that ran accurately.
    pub provided_ratio: f64,
    /// Mean over group epochs.
    pub inversion_pct: f64,
    pub pairwise_inversion_pct: f64,
    pub ratio_diff: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub quality_value: f64,
    pub quality_metric: String,
    pub wall_secs: f64,
    pub reference_wall_secs: f64,
    pub tasks: TaskCounts,
    pub group_epochs: usize,
    pub groups: Vec<GroupStats>,
    pub energy_note: String,
    pub self_checks: Vec<SelfCheck>,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

impl QualityReport {
    pub fn passed(&self) -> bool {
        self.self_checks.iter().all(|c| c.passed)
    }

    pub fn row(&self) -> CsvRow {
        CsvRow {
            benchmark: self.benchmark.clone(),
            policy: self.policy.clone(),
            preset: self.preset.clone(),
            requested_ratio: self.requested_ratio,
            provided_ratio: self.provided_ratio,
            inversion_pct: self.inversion_pct,
            ratio_diff: self.ratio_diff,
            quality_value: self.quality_value,
            quality_metric: self.quality_metric.clone(),
            wall_secs: self.wall_secs,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub benchmark: String,
    pub policy: String,
    pub preset: String,
    pub requested_ratio: f64,
    pub provided_ratio: f64,
    pub inversion_pct: f64,
    pub ratio_diff: f64,
    pub quality_value: f64,
    pub quality_metric: String,
    pub wall_secs: f64,
    pub seed: u64,
}

pub fn write_csv<W: std::io::Write, T: Serialize>(w: W, rows: &[T]) -> anyhow::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadRow {
    pub benchmark: String,
    pub policy: String,
    pub repetitions: usize,
    pub median_secs: f64,
    /// Median time divided by the Agnostic median.
    pub normalized: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_order() {
        let row = CsvRow {
            benchmark: "sobel".into(),
            policy: "lqh".into(),
            preset: "mild".into(),
            requested_ratio: 0.8,
            provided_ratio: 0.8,
            inversion_pct: 0.0,
            ratio_diff: 0.0,
            quality_value: f64::INFINITY,
            quality_metric: "psnr_db".into(),
            wall_secs: 0.5,
            seed: 7,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "benchmark,policy,preset,requested_ratio,provided_ratio,inversion_pct,ratio_diff,quality_value,quality_metric,wall_secs,seed"
        );
        assert_eq!(lines.next().unwrap(), "sobel,lqh,mild,0.8,0.8,0.0,0.0,inf,psnr_db,0.5,7");
    }

    #[test]
    fn infinite_psnr_survives_json() {
        #[derive(Serialize)]
        struct W(#[serde(serialize_with = "finite_or_string")] f64);
        assert_eq!(serde_json::to_string(&W(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&W(1.5)).unwrap(), "1.5");
    }
}
