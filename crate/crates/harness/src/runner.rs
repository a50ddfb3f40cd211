//! Executes benchmark runs and turns their execution records into reports.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::time::Duration;

use anyhow::{Context, Result};
use sigrt::quality::{group_stats, inversion_percent, median, pairwise_inversion_percent, records_ratio_diff};
use sigrt::{BufferSize, ExecutionDecision, ExecutionRecord, PolicyConfig, Runtime};
use sigrt_kernels::{Benchmark, DegreePreset, Input, Output, Quality, RunSpec};

use crate::config::RunConfig;
use crate::report::{OverheadRow, QualityReport, SelfCheck, TaskCounts, ENERGY_NOTE};

pub const VERSION: &str = concat!("sigrt ", env!("CARGO_PKG_VERSION"));

type Key = (Benchmark, usize, u64);

struct Reference {
    output: Output,
    elapsed: Duration,
}

/// One finished run: the report plus the raw kernel output.
pub struct Measured {
    pub report: QualityReport,
    pub output: Output,
    pub records: Vec<ExecutionRecord>,
}

/// Caches generated inputs and accurate reference outputs by
/// `(benchmark, size, seed)` so sweeps compute each reference once.
#[derive(Default)]
pub struct Harness {
    inputs: HashMap<Key, Input>,
    references: HashMap<Key, Reference>,
}

fn preset_label(preset: Option<DegreePreset>, ratio: Option<f64>) -> String {
    match (ratio, preset) {
        (Some(_), _) => "custom".into(),
        (None, Some(p)) => p.name().into(),
        (None, None) => "accurate".into(),
    }
}

fn self_checks(policy: PolicyConfig, records: &[ExecutionRecord], spawned: u64, quality: &Result<Quality>) -> Vec<SelfCheck> {
    let mut checks = vec![SelfCheck::new(
        "tasks_accounted",
        records.len() as u64 == spawned,
        format!("{} records for {spawned} spawned tasks", records.len()),
    )];
    let stats = group_stats(records);
    match policy {
        PolicyConfig::Agnostic => {
            let non = records.iter().filter(|r| r.decision != ExecutionDecision::Accurate).count();
            checks.push(SelfCheck::new("agnostic_all_accurate", non == 0, format!("{non} non-accurate tasks")));
        }
        _ => {
            let bad = records
                .iter()
                .filter(|r| {
                    let s = r.significance.value();
                    (s == 1.0 && !r.decision.is_accurate()) || (s == 0.0 && r.decision.is_accurate())
                })
                .count();
            checks.push(SelfCheck::new("forced_significance", bad == 0, format!("{bad} violations")));
        }
    }
    if policy == PolicyConfig::gtb(BufferSize::Max) {
        let inverted: usize = stats.iter().map(|s| s.inverted).sum();
        let off = stats
            .iter()
            .filter(|s| (s.requested - s.provided).abs() > 1.0 / s.tasks as f64 + 1e-12)
            .count();
        checks.push(SelfCheck::new(
            "gtb_max_exact",
            inverted == 0 && off == 0,
            format!("{inverted} inverted tasks, {off} group epochs off by more than one task"),
        ));
    }
    match quality {
        Ok(q) => checks.push(SelfCheck::new("quality_defined", !q.value.is_nan(), format!("{}", q.value))),
        Err(e) => checks.push(SelfCheck::new("quality_defined", false, format!("{e:#}"))),
    }
    checks
}

impl Harness {
    pub fn new() -> Self {
        Harness::default()
    }

    pub fn input(&mut self, bench: Benchmark, size: usize, seed: u64) -> Result<&Input> {
        let key = (bench, size, seed);
        if let Entry::Vacant(e) = self.inputs.entry(key) {
            e.insert(bench.generate(seed, size).with_context(|| format!("generating {bench} input"))?);
        }
        Ok(&self.inputs[&key])
    }

    fn ensure_reference(&mut self, bench: Benchmark, size: usize, seed: u64, workers: usize) -> Result<()> {
        let key = (bench, size, seed);
        if self.references.contains_key(&key) {
            return Ok(());
        }
        let input = self.input(bench, size, seed)?.clone();
        let mut rt = Runtime::new(workers, PolicyConfig::Agnostic)?;
        let run = bench.run(&mut rt, &input, &RunSpec::reference(seed)).with_context(|| format!("{bench} reference run"))?;
        rt.shutdown()?;
        self.references.insert(key, Reference { output: run.output, elapsed: run.elapsed });
        Ok(())
    }

    /// Accurate output for the given input, computed once.
    pub fn reference(&mut self, bench: Benchmark, size: usize, seed: u64, workers: usize) -> Result<&Output> {
        self.ensure_reference(bench, size, seed, workers)?;
        Ok(&self.references[&(bench, size, seed)].output)
    }

    /// Runs one benchmark under one policy. `preset = None` and no ratio
    /// override gives the accurate configuration.
    pub fn measure(&mut self, cfg: &RunConfig, bench: Benchmark, policy: PolicyConfig, preset: Option<DegreePreset>) -> Result<Measured> {
        let size = cfg.size_for(bench);
        let seed = cfg.seed;
        self.ensure_reference(bench, size, seed, cfg.workers)?;
        let input = self.input(bench, size, seed)?.clone();
        let spec = RunSpec { preset, ratio: cfg.ratio, uniform: false, seed };

        let mut rt = Runtime::new(cfg.workers, policy)?;
        let run = bench.run(&mut rt, &input, &spec).with_context(|| format!("{bench} under {policy}"))?;
        let records = rt.take_records();
        let spawned = rt.spawned();
        rt.shutdown()?;

        let reference = &self.references[&(bench, size, seed)];
        let quality = run.output.quality(&reference.output).map_err(anyhow::Error::from);
        let stats = group_stats(&records);
        let total: usize = stats.iter().map(|s| s.tasks).sum();
        let weighted: f64 = stats.iter().map(|s| s.requested * s.tasks as f64).sum();
        let count = |d| records.iter().filter(|r| r.decision == d).count();
        let tasks = TaskCounts {
            total: records.len(),
            accurate: count(ExecutionDecision::Accurate),
            approximate: count(ExecutionDecision::Approximate),
            dropped: count(ExecutionDecision::Dropped),
        };
        let checks = self_checks(policy, &records, spawned, &quality);
        let (quality_value, quality_metric) = match &quality {
            Ok(q) => (q.value, q.metric.name().to_string()),
            Err(_) => (f64::NAN, "undefined".to_string()),
        };
        let report = QualityReport {
            version: VERSION.to_string(),
            benchmark: bench.name().to_string(),
            policy: policy.to_string(),
            preset: preset_label(preset, cfg.ratio),
            size,
            workers: cfg.workers,
            seed,
            requested_ratio: if total > 0 { weighted / total as f64 } else { 1.0 },
            provided_ratio: if total > 0 { tasks.accurate as f64 / total as f64 } else { 1.0 },
            inversion_pct: inversion_percent(&records),
            pairwise_inversion_pct: pairwise_inversion_percent(&records),
            ratio_diff: records_ratio_diff(&records).unwrap_or(0.0),
            quality_value,
            quality_metric,
            wall_secs: run.elapsed.as_secs_f64(),
            reference_wall_secs: reference.elapsed.as_secs_f64(),
            tasks,
            group_epochs: stats.len(),
            groups: stats,
            energy_note: ENERGY_NOTE.to_string(),
            self_checks: checks,
            outputs: Vec::new(),
            config: cfg.clone(),
        };
        Ok(Measured { report, output: run.output, records })
    }
}

/// The `run` subcommand: first benchmark, policy and preset of the config.
pub fn cli_run(cfg: &RunConfig) -> Result<QualityReport> {
    let bench = cfg.benchmarks[0];
    let policy = cfg.policies[0];
    let preset = if cfg.ratio.is_some() { None } else { cfg.presets.first().copied() };
    let mut h = Harness::new();
    let mut m = h.measure(cfg, bench, policy, preset)?;
    if let Some(dir) = &cfg.out {
        let stem = format!("{}-{}-{}", bench, slug(&m.report.policy), m.report.preset);
        let files = m.output.write(dir, &stem)?;
        m.report.outputs = files.iter().map(|p| p.display().to_string()).collect();
        if bench == Benchmark::Sobel || bench == Benchmark::Dct {
            let refs = h.reference(bench, cfg.size_for(bench), cfg.seed, cfg.workers)?.write(dir, &format!("{bench}-reference"))?;
            m.report.outputs.extend(refs.iter().map(|p| p.display().to_string()));
        }
    }
    Ok(m.report)
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect::<String>().trim_matches('-').to_string()
}

/// The `sweep` subcommand: benchmark x policy x preset in that nesting
/// order. With a ratio override the preset axis collapses to one entry.
pub fn cli_sweep(cfg: &RunConfig) -> Result<Vec<QualityReport>> {
    let mut h = Harness::new();
    let presets: Vec<Option<DegreePreset>> =
        if cfg.ratio.is_some() { vec![None] } else { cfg.presets.iter().copied().map(Some).collect() };
    let mut out = Vec::new();
    for &bench in &cfg.benchmarks {
        for &policy in &cfg.policies {
            for &preset in &presets {
                out.push(h.measure(cfg, bench, policy, preset)?.report);
            }
        }
    }
    Ok(out)
}

/// The `overhead` subcommand: ratio 1.0 with uniform significance, each
/// policy timed `repetitions` times (interleaved, after one warm-up run),
/// medians normalised to Agnostic.
pub fn cli_overhead(cfg: &RunConfig) -> Result<Vec<OverheadRow>> {
    let mut policies = vec![PolicyConfig::Agnostic];
    for p in &cfg.policies {
        if !policies.contains(p) {
            policies.push(*p);
        }
    }
    let mut h = Harness::new();
    let mut rows = Vec::new();
    for &bench in &cfg.benchmarks {
        let input = h.input(bench, cfg.size_for(bench), cfg.seed)?.clone();
        let spec = RunSpec::overhead(cfg.seed);
        let mut runtimes = policies.iter().map(|&p| Runtime::new(cfg.workers, p)).collect::<Result<Vec<_>, _>>()?;
        let mut times = vec![Vec::with_capacity(cfg.repetitions); policies.len()];
        for rt in &mut runtimes {
            bench.run(rt, &input, &spec)?;
            rt.take_records();
        }
        for rep in 0..cfg.repetitions {
            for k in 0..policies.len() {
                let i = (k + rep) % policies.len();
                let run = bench.run(&mut runtimes[i], &input, &spec)?;
                runtimes[i].take_records();
                times[i].push(run.elapsed.as_secs_f64());
            }
        }
        // Each repetition is normalized by the agnostic time of the same
        // round, so slow drift in machine speed cancels out.
        for (p, t) in policies.iter().zip(&times) {
            let paired: Vec<f64> = t.iter().zip(&times[0]).map(|(a, b)| a / b).collect();
            rows.push(OverheadRow {
                benchmark: bench.name().to_string(),
                policy: p.to_string(),
                repetitions: t.len(),
                median_secs: median(t).unwrap_or(f64::NAN),
                normalized: median(&paired).unwrap_or(f64::NAN),
            });
        }
    }
    Ok(rows)
}

pub fn list_benchmarks() -> String {
    let mut s = String::new();
    for b in sigrt_kernels::Benchmark::ALL {
        let presets: Vec<String> = DegreePreset::ALL
            .iter()
            .map(|p| match p.ratio(b) {
                Some(r) => format!("{p}={r}"),
                None => format!("{p}=tol {:e}", p.jacobi_tolerance()),
            })
            .collect();
        s.push_str(&format!(
            "{:<12} {}\n{:<12} size: {} (default {}); presets: {}\n",
            b.name(),
            b.description(),
            "",
            b.size_meaning(),
            b.default_size(),
            presets.join(", ")
        ));
    }
    s
}

/// Writes `reports` in the configured format to `<out>/<name>.<ext>` or
/// stdout.
pub fn emit_reports(cfg: &RunConfig, reports: &[QualityReport], name: &str) -> Result<()> {
    use crate::config::Format;
    let rows: Vec<_> = reports.iter().map(QualityReport::row).collect();
    let write = |w: &mut dyn std::io::Write| -> Result<()> {
        match cfg.format {
            Format::Csv => crate::report::write_csv(w, &rows),
            Format::Json if reports.len() == 1 => Ok(serde_json::to_writer_pretty(&mut *w, &reports[0])?),
            Format::Json => Ok(serde_json::to_writer_pretty(&mut *w, reports)?),
        }
    };
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{}", cfg.format));
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write(&mut f)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            if cfg.format == Format::Json {
                println!();
            }
        }
    }
    Ok(())
}
