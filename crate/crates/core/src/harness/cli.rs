use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::config::SimConfig;
use super::metrics::{report, run_monte_carlo, run_trials, summarize_results, MetricsSummary};
use super::scheme::SchemeRegistry;
use crate::{Error, Result};

pub const SWEEP_K: [usize; 6] = [10, 12, 14, 16, 18, 20];
pub const SWEEP_V_MAX: [f64; 5] = [10.0, 15.0, 20.0, 25.0, 30.0];
pub const SWEEP_SCHEMES: [&str; 3] = ["dia", "location-isac", "velocity-isac"];

#[derive(Parser, Debug)]
#[command(name = "dia-isac", version, about = "Multi-UAV ISAC beam tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scheme and write its per-trial CSV and summary.
    Simulate(RunArgs),
    /// Accuracy over a grid of fleet sizes and speed limits.
    Sweep(RunArgs),
    /// Run every registered scheme on the same seeds.
    Compare(RunArgs),
    /// Recompute summaries from existing per-trial CSVs.
    Report(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.master_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.run.trials = t;
        }
        if let Some(o) = &self.out {
            cfg.run.out_dir = o.clone();
        }
        if let Some(s) = &self.scheme {
            cfg.run.scheme = s.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub v_max_mps: f64,
    pub scheme: String,
    pub trials: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub mean_rate: f64,
}

/// Accuracy of each scheme over the `(K, v_max)` grid.
pub fn sweep(
    base: &SimConfig,
    registry: &SchemeRegistry,
    schemes: &[&str],
    ks: &[usize],
    v_maxes: &[f64],
) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for &k in ks {
        for &v in v_maxes {
            let mut cfg = base.clone();
            cfg.fleet.k = k;
            cfg.fleet.v_max_mps = v;
            cfg.fleet.v_min_mps = cfg.fleet.v_min_mps.min(v);
            for &name in schemes {
                let scheme = registry.get(name)?;
                let s = summarize_results(name, &run_trials(&cfg, scheme.as_ref())?)?;
                points.push(SweepPoint {
                    k,
                    v_max_mps: v,
                    scheme: name.to_string(),
                    trials: s.trials,
                    accuracy_mean: s.accuracy_mean,
                    accuracy_std: s.accuracy_std,
                    mean_rate: s.mean_rate,
                });
            }
        }
    }
    Ok(points)
}

/// Runs every scheme in `registry` under `cfg`, writing per-scheme outputs.
pub fn compare(cfg: &SimConfig, registry: &SchemeRegistry) -> Result<Vec<MetricsSummary>> {
    registry
        .names()
        .map(|name| run_monte_carlo(cfg, registry.get(name)?.as_ref()))
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn print_summary(s: &MetricsSummary) {
    println!(
        "{:<14} trials={:<4} accuracy={:.4} (std {:.4}) rate={:.3} bps/Hz final-quarter={:.3}",
        s.scheme, s.trials, s.accuracy_mean, s.accuracy_std, s.mean_rate, s.final_quarter_rate
    );
}

fn execute(command: Command) -> Result<()> {
    let registry = SchemeRegistry::default();
    match command {
        Command::Simulate(args) => {
            let cfg = args.config()?;
            let scheme = registry.get(&cfg.run.scheme)?;
            print_summary(&run_monte_carlo(&cfg, scheme.as_ref())?);
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            let schemes: Vec<&str> = match &args.scheme {
                Some(s) => vec![s.as_str()],
                None => SWEEP_SCHEMES.to_vec(),
            };
            for s in &schemes {
                registry.get(s)?;
            }
            let points = sweep(&cfg, &registry, &schemes, &SWEEP_K, &SWEEP_V_MAX)?;
            std::fs::create_dir_all(&cfg.run.out_dir).map_err(|e| Error::io(&cfg.run.out_dir, e))?;
            write_csv(&cfg.run.out_dir.join("sweep.csv"), &points)?;
            for p in &points {
                println!(
                    "K={:<3} v_max={:<5} {:<14} accuracy={:.4}",
                    p.k, p.v_max_mps, p.scheme, p.accuracy_mean
                );
            }
        }
        Command::Compare(args) => {
            let cfg = args.config()?;
            for s in compare(&cfg, &registry)? {
                print_summary(&s);
            }
        }
        Command::Report(args) => {
            let cfg = args.config()?;
            let names: Vec<String> = match &args.scheme {
                Some(s) => vec![s.clone()],
                None => registry
                    .names()
                    .filter(|n| super::metrics::trials_path(&cfg.run.out_dir, n).exists())
                    .map(str::to_string)
                    .collect(),
            };
            if names.is_empty() {
                return Err(Error::Config(format!(
                    "no trials_<scheme>.csv files in {}",
                    cfg.run.out_dir.display()
                )));
            }
            for n in names {
                print_summary(&report(&cfg.run.out_dir, &n)?);
            }
        }
    }
    Ok(())
}

/// Entry point shared by the binary and the tests. Returns the process exit
/// code: 0 on success, 1 for usage or configuration errors, 2 otherwise.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}
