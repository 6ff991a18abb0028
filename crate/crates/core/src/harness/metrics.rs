use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::scheme::AssociationScheme;
use super::trial::{Simulation, TrialResult};
use crate::array::Angles;
use crate::{Error, Result};

/// Smallest linear SNR written to the CSV, so `snr_db` stays finite.
const SNR_FLOOR: f64 = 1e-30;

/// SplitMix64 finalizer of `master ^ trial`, giving well-spread trial seeds.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master.wrapping_add((trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `cfg.run.trials` independent trials in parallel, in trial order.
pub fn run_trials(cfg: &SimConfig, scheme: &dyn AssociationScheme) -> Result<Vec<TrialResult>> {
    let sim = Simulation::new(cfg, scheme)?;
    (0..cfg.run.trials)
        .into_par_iter()
        .map(|t| sim.run_trial(t, trial_seed(cfg.run.master_seed, t)))
        .collect()
}

/// One line of the per-trial CSV. Angles are in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub trial: usize,
    pub slot: usize,
    pub uav: usize,
    pub true_az: f64,
    pub true_el: f64,
    pub pred_az: f64,
    pub pred_el: f64,
    pub assigned_ok: bool,
    pub snr_db: f64,
    pub rate_bps_hz: f64,
}

pub fn rows_of(results: &[TrialResult]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for r in results {
        for s in &r.slots {
            for l in &s.links {
                rows.push(CsvRow {
                    trial: r.trial,
                    slot: s.slot,
                    uav: l.uav,
                    true_az: l.true_angles.azimuth.to_degrees(),
                    true_el: l.true_angles.elevation.to_degrees(),
                    pred_az: l.beam_angles.azimuth.to_degrees(),
                    pred_el: l.beam_angles.elevation.to_degrees(),
                    assigned_ok: l.assigned_ok,
                    snr_db: 10.0 * l.snr.max(SNR_FLOOR).log10(),
                    rate_bps_hz: l.rate,
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scheme: String,
    pub trials: usize,
    pub k: usize,
    pub horizon: usize,
    pub accuracy_mean: f64,
    /// Population standard deviation over trials.
    pub accuracy_std: f64,
    /// Trials with no slots; each counts as accuracy 1.
    pub vacuous_trials: usize,
    pub per_trial_accuracy: Vec<f64>,
    pub mean_rate: f64,
    /// Mean rate over the last quarter of the horizon.
    pub final_quarter_rate: f64,
    pub rate_per_slot: Vec<f64>,
    /// RMS angle between beam and true direction per slot, degrees.
    pub angle_rmse_deg: Vec<f64>,
}

impl MetricsSummary {
    fn vacuous(scheme: &str, trials: usize, k: usize) -> Self {
        Self {
            scheme: scheme.to_string(),
            trials,
            k,
            horizon: 0,
            accuracy_mean: 1.0,
            accuracy_std: 0.0,
            vacuous_trials: trials,
            per_trial_accuracy: vec![1.0; trials],
            mean_rate: 0.0,
            final_quarter_rate: 0.0,
            rate_per_slot: Vec::new(),
            angle_rmse_deg: Vec::new(),
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates CSV rows; the same function serves fresh runs and `report`.
pub fn summarize(scheme: &str, rows: &[CsvRow]) -> Result<MetricsSummary> {
    if rows.is_empty() {
        return Err(Error::Domain("no records to summarize".into()));
    }
    let horizon = rows.iter().map(|r| r.slot).max().unwrap_or(0) + 1;
    let k = rows.iter().map(|r| r.uav).max().unwrap_or(0) + 1;

    let mut by_trial: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut rate_sum = vec![0.0; horizon];
    let mut sq_sep = vec![0.0; horizon];
    let mut count = vec![0usize; horizon];
    for r in rows {
        let e = by_trial.entry(r.trial).or_default();
        e.0 += r.assigned_ok as usize;
        e.1 += 1;
        rate_sum[r.slot] += r.rate_bps_hz;
        let truth = Angles::new(r.true_az.to_radians(), r.true_el.to_radians());
        let beam = Angles::new(r.pred_az.to_radians(), r.pred_el.to_radians());
        sq_sep[r.slot] += truth.separation(&beam).to_degrees().powi(2);
        count[r.slot] += 1;
    }
    let per_trial_accuracy: Vec<f64> = by_trial.values().map(|(c, n)| *c as f64 / *n as f64).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&per_trial_accuracy);
    let per_slot = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(&count)
            .map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    };
    let rate_per_slot = per_slot(&rate_sum);
    let angle_rmse_deg = per_slot(&sq_sep).into_iter().map(f64::sqrt).collect();
    let mean_rate = rows.iter().map(|r| r.rate_bps_hz).sum::<f64>() / rows.len() as f64;
    let tail = &rate_per_slot[(3 * horizon) / 4..];
    let final_quarter_rate = tail.iter().sum::<f64>() / tail.len() as f64;

    Ok(MetricsSummary {
        scheme: scheme.to_string(),
        trials: per_trial_accuracy.len(),
        k,
        horizon,
        accuracy_mean,
        accuracy_std,
        vacuous_trials: 0,
        per_trial_accuracy,
        mean_rate,
        final_quarter_rate,
        rate_per_slot,
        angle_rmse_deg,
    })
}

/// Summary straight from trial results, without touching the filesystem.
pub fn summarize_results(scheme: &str, results: &[TrialResult]) -> Result<MetricsSummary> {
    let rows = rows_of(results);
    if rows.is_empty() {
        let k = results.first().map_or(0, |r| r.k);
        return Ok(MetricsSummary::vacuous(scheme, results.len(), k));
    }
    summarize(scheme, &rows)
}

pub fn write_rows(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if rows.is_empty() {
        w.write_record([
            "trial", "slot", "uav", "true_az", "true_el", "pred_az", "pred_el", "assigned_ok", "snr_db",
            "rate_bps_hz",
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_summary(path: &Path, s: &MetricsSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(s).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn trials_path(out_dir: &Path, scheme: &str) -> PathBuf {
    out_dir.join(format!("trials_{scheme}.csv"))
}

pub fn summary_path(out_dir: &Path, scheme: &str) -> PathBuf {
    out_dir.join(format!("summary_{scheme}.json"))
}

/// Runs all trials of `scheme`, writes `trials_<scheme>.csv` and
/// `summary_<scheme>.json` into `cfg.run.out_dir`, and returns the summary.
pub fn run_monte_carlo(cfg: &SimConfig, scheme: &dyn AssociationScheme) -> Result<MetricsSummary> {
    let results = run_trials(cfg, scheme)?;
    let out = &cfg.run.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let rows = rows_of(&results);
    write_rows(&trials_path(out, scheme.name()), &rows)?;
    let summary = summarize_results(scheme.name(), &results)?;
    write_summary(&summary_path(out, scheme.name()), &summary)?;
    Ok(summary)
}

/// Recomputes `summary_<scheme>.json` from an existing `trials_<scheme>.csv`.
pub fn report(out_dir: &Path, scheme: &str) -> Result<MetricsSummary> {
    let rows = read_rows(&trials_path(out_dir, scheme))?;
    let summary = summarize(scheme, &rows)?;
    write_summary(&summary_path(out_dir, scheme), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, slot: usize, uav: usize, ok: bool, rate: f64) -> CsvRow {
        CsvRow {
            trial,
            slot,
            uav,
            true_az: 10.0,
            true_el: 45.0,
            pred_az: 10.0,
            pred_el: 46.0,
            assigned_ok: ok,
            snr_db: 3.0,
            rate_bps_hz: rate,
        }
    }

    #[test]
    fn seeds_differ_per_trial() {
        let s: Vec<u64> = (0..100).map(|t| trial_seed(7, t)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(trial_seed(7, 3), s[3]);
    }

    #[test]
    fn accounting_identity() {
        let mut rows = Vec::new();
        for t in 0..3 {
            for n in 0..4 {
                for u in 0..2 {
                    rows.push(row(t, n, u, (t + n + u) % 3 != 0, 1.0));
                }
            }
        }
        let s = summarize("x", &rows).unwrap();
        let direct = rows.iter().filter(|r| r.assigned_ok).count() as f64 / rows.len() as f64;
        assert!((s.accuracy_mean - direct).abs() < 1e-12);
        assert_eq!((s.trials, s.k, s.horizon), (3, 2, 4));
        assert!((s.angle_rmse_deg[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn population_std() {
        let rows = vec![row(0, 0, 0, true, 0.0), row(1, 0, 0, false, 0.0)];
        let s = summarize("x", &rows).unwrap();
        assert_eq!((s.accuracy_mean, s.accuracy_std), (0.5, 0.5));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![row(0, 0, 0, true, 1.0 / 3.0), row(0, 1, 0, false, 0.0)];
        write_rows(&path, &rows).unwrap();
        assert_eq!(read_rows(&path).unwrap(), rows);
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with(
            "trial,slot,uav,true_az,true_el,pred_az,pred_el,assigned_ok,snr_db,rate_bps_hz\n"
        ));
    }

    #[test]
    fn empty_rows_are_an_error() {
        assert!(summarize("x", &[]).is_err());
    }
}
