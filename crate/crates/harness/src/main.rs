use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use sigrt_harness::{cli_overhead, cli_run, cli_sweep, emit_reports, list_benchmarks, report, Format, RunConfig};

#[derive(Parser)]
#[command(name = "sigrt", version, about = "Run and measure significance-aware task benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one benchmark under one policy and print a quality report
    Run(Flags),
    /// Run every benchmark x policy x preset combination
    Sweep(Flags),
    /// Time ratio-1.0, uniform-significance runs relative to the agnostic policy
    Overhead(Flags),
    /// List the available benchmarks and their presets
    ListBenchmarks,
}

#[derive(Args, Default)]
struct Flags {
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark name(s), comma separated
    #[arg(long)]
    bench: Option<String>,
    /// agnostic, gtb, gtb-max, lqh, lqh-ties or perforation (comma separated)
    #[arg(long)]
    policy: Option<String>,
    /// GTB buffer size: a positive number or "max"
    #[arg(long)]
    buffer: Option<String>,
    /// mild, medium or aggressive (comma separated)
    #[arg(long)]
    preset: Option<String>,
    /// Accurate-task ratio overriding the preset
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Problem size (see list-benchmarks)
    #[arg(long)]
    size: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// json or csv
    #[arg(long)]
    format: Option<String>,
}

impl Flags {
    fn resolve(&self, default_format: Format) -> Result<RunConfig> {
        let mut m = BTreeMap::new();
        let pairs = [
            ("bench", &self.bench),
            ("policy", &self.policy),
            ("buffer", &self.buffer),
            ("preset", &self.preset),
            ("ratio", &self.ratio),
            ("workers", &self.workers),
            ("seed", &self.seed),
            ("size", &self.size),
            ("repetitions", &self.repetitions),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        let mut file = BTreeMap::new();
        if let Some(p) = &self.config {
            file = sigrt_harness::config::parse_file(&std::fs::read_to_string(p)?)?;
        }
        if !m.contains_key("format") && !file.contains_key("format") {
            m.insert("format".into(), default_format.to_string());
        }
        file.extend(m);
        RunConfig::from_map(&file)
    }
}

fn failed_checks(reports: &[sigrt_harness::QualityReport]) -> usize {
    let mut n = 0;
    for r in reports {
        for c in r.self_checks.iter().filter(|c| !c.passed) {
            eprintln!("self-check failed: {} {} {}: {} ({})", r.benchmark, r.policy, r.preset, c.name, c.detail);
            n += 1;
        }
    }
    n
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<usize> {
        match cli.cmd {
            Cmd::Run(f) => {
                let cfg = f.resolve(Format::Json)?;
                let reports = [cli_run(&cfg)?];
                emit_reports(&cfg, &reports, "report")?;
                Ok(failed_checks(&reports))
            }
            Cmd::Sweep(f) => {
                let cfg = f.resolve(Format::Csv)?;
                let reports = cli_sweep(&cfg)?;
                emit_reports(&cfg, &reports, "sweep")?;
                Ok(failed_checks(&reports))
            }
            Cmd::Overhead(f) => {
                let cfg = f.resolve(Format::Csv)?;
                let rows = cli_overhead(&cfg)?;
                let write = |w: &mut dyn std::io::Write| -> Result<()> {
                    match cfg.format {
                        Format::Csv => report::write_csv(w, &rows),
                        Format::Json => Ok(serde_json::to_writer_pretty(w, &rows)?),
                    }
                };
                match &cfg.out {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)?;
                        let path = dir.join(format!("overhead.{}", cfg.format));
                        write(&mut std::fs::File::create(&path)?)?;
                        eprintln!("wrote {}", path.display());
                    }
                    None => write(&mut std::io::stdout().lock())?,
                }
                Ok(0)
            }
            Cmd::ListBenchmarks => {
                print!("{}", list_benchmarks());
                Ok(0)
            }
        }
    })();
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
