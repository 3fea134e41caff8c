//! Result files: CSV tables, a JSON report and the JSON manifest.
//!
//! Floats are written with 17 significant digits, `.` decimal separator and
//! LF line endings. Wall-clock timings go to `timings.json`, which is the only
//! file allowed to differ between identical runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::Result;
use crate::experiments::{ConstellationDump, ExperimentReport, SweepPoint};

pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// `snr_db,ser,sum_rate,mse`, one row per grid point. `std` picks the
/// across-realization standard deviations instead of the means.
pub fn metrics_csv(rep: &ExperimentReport, std: bool) -> String {
    let c = &rep.curves;
    let pick = |a: &crate::experiments::Aggregate| if std { a.std.clone() } else { a.mean.clone() };
    let (ser, rate, mse) = (pick(&c.ser), pick(&c.sum_rate), pick(&c.mse));
    csv(
        "snr_db,ser,sum_rate,mse",
        c.snr_db
            .iter()
            .enumerate()
            .map(|(i, s)| vec![f17(*s), f17(ser[i]), f17(rate[i]), f17(mse[i])]),
    )
}

/// `episode,loss_mean,loss_std,eta` with mean and spread taken across realizations.
pub fn convergence_csv(rep: &ExperimentReport) -> String {
    let c = &rep.convergence;
    csv(
        "episode,loss_mean,loss_std,eta",
        (0..c.mean.len()).map(|t| vec![(t + 1).to_string(), f17(c.mean[t]), f17(c.std[t]), f17(rep.eta[t])]),
    )
}

/// `layer,avg_diag_power,avg_offdiag_power,diag_variance_db,offdiag_suppression_db`.
pub fn diagonality_csv(rep: &ExperimentReport) -> String {
    csv(
        "layer,avg_diag_power,avg_offdiag_power,diag_variance_db,offdiag_suppression_db",
        rep.diagonality.iter().enumerate().filter_map(|(l, d)| {
            d.map(|d| {
                vec![
                    (l + 1).to_string(),
                    f17(d.avg_diag_power),
                    f17(d.avg_offdiag_power),
                    f17(d.diag_variance_db),
                    f17(d.offdiag_suppression_db),
                ]
            })
        }),
    )
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    files.push(p);
    Ok(())
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Manifest fields shared by every command.
pub fn manifest(command: &str, cfg: &RunConfig, artifacts: &[PathBuf], extra: serde_json::Value) -> serde_json::Value {
    let names: Vec<String> = artifacts
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": cfg.schema_version,
        "command": command,
        "config_hash": cfg.hash(),
        "master_seed": cfg.seed,
        "seed_derivation": "first 8 bytes (LE) of SHA-256(master_le || len(purpose)_le || purpose || index_le)",
        "config": cfg,
        "artifacts": names,
        "summary": extra,
    })
}

pub fn write_manifest(dir: &Path, value: &serde_json::Value, files: &mut Vec<PathBuf>) -> Result<()> {
    write(dir, "manifest.json", &json_text(value), files)
}

pub fn write_timings(dir: &Path, seconds: f64) -> Result<PathBuf> {
    let p = dir.join("timings.json");
    fs::write(&p, json_text(&json!({ "wall_seconds": seconds })))?;
    Ok(p)
}

fn summary(rep: &ExperimentReport) -> serde_json::Value {
    json!({
        "realizations": rep.count(),
        "final_loss_mean": rep.final_loss.mean[0],
        "final_loss_std": rep.final_loss.std[0],
        "constellation_mse_mean": rep.constellation_mse.mean[0],
        "constellation_mse_std": rep.constellation_mse.std[0],
        "snr_db": rep.curves.snr_db,
        "ser_mean": rep.curves.ser.mean,
        "sum_rate_mean": rep.curves.sum_rate.mean,
        "sum_rate_db": rep.curves.sum_rate.mean.iter().map(|r| 10.0 * r.log10()).collect::<Vec<_>>(),
        "realization_seeds": rep.realizations.iter().map(|r| r.seeds).collect::<Vec<_>>(),
        "assignments": rep.realizations.iter().map(|r| r.assignment.clone()).collect::<Vec<_>>(),
    })
}

/// Writes one experiment's tables into `dir` (created if needed) and returns
/// the files written, excluding the manifest.
pub fn write_report(rep: &ExperimentReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    if formats.contains(&Format::Csv) {
        write(dir, "metrics.csv", &metrics_csv(rep, false), &mut files)?;
        write(dir, "metrics_std.csv", &metrics_csv(rep, true), &mut files)?;
        write(dir, "convergence.csv", &convergence_csv(rep), &mut files)?;
        write(dir, "diagonality.csv", &diagonality_csv(rep), &mut files)?;
        if let Some(r) = rep.realizations.first() {
            let (rx, ideal) = &r.constellation;
            write(dir, "constellation.csv", &ConstellationDump::from_matrices(rx, ideal)?.to_csv(), &mut files)?;
        }
        for r in &rep.realizations {
            write(dir, &format!("training_r{}.csv", r.index), &r.train.to_csv(), &mut files)?;
        }
    }
    if formats.contains(&Format::Json) {
        write(dir, "report.json", &json_text(rep), &mut files)?;
    }
    Ok(files)
}

/// Report plus manifest for a single experiment; `extra_files` already written
/// to `dir` are listed in the manifest too.
pub fn write_experiment(
    command: &str,
    cfg: &RunConfig,
    rep: &ExperimentReport,
    dir: &Path,
    mut extra_files: Vec<PathBuf>,
) -> Result<Vec<PathBuf>> {
    let mut files = write_report(rep, dir, &cfg.output.formats)?;
    files.append(&mut extra_files);
    let m = manifest(command, cfg, &files, summary(rep));
    write_manifest(dir, &m, &mut files)?;
    Ok(files)
}

/// `value,snr_db,ser,sum_rate,mse` across sweep points (long format).
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut rows = Vec::new();
    for p in points {
        let c = &p.report.curves;
        for (i, s) in c.snr_db.iter().enumerate() {
            rows.push(vec![
                f17(p.value),
                f17(*s),
                f17(c.ser.mean[i]),
                f17(c.sum_rate.mean[i]),
                f17(c.mse.mean[i]),
            ]);
        }
    }
    csv("value,snr_db,ser,sum_rate,mse", rows)
}

/// `value,final_loss,final_loss_std,constellation_mse,constellation_mse_std`.
pub fn sweep_summary_csv(points: &[SweepPoint]) -> String {
    csv(
        "value,final_loss,final_loss_std,constellation_mse,constellation_mse_std",
        points.iter().map(|p| {
            let r = &p.report;
            vec![
                f17(p.value),
                f17(r.final_loss.mean[0]),
                f17(r.final_loss.std[0]),
                f17(r.constellation_mse.mean[0]),
                f17(r.constellation_mse.std[0]),
            ]
        }),
    )
}
