//! `simctl` front end. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error (including failed validation checks).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::channel::ChannelDump;
use crate::config::{load_config, RunConfig};
use crate::error::{Result, SimError};
use crate::experiments::{
    distance_robustness, draw_realization, run_jamming, run_multiuser, run_realization, run_sweep,
    JammingMode,
};
use crate::geometry::build_geometry;
use crate::report::{self, write_experiment, write_manifest, write_timings};

#[derive(Parser, Debug)]
#[command(name = "simctl", version, about = "Learnable stacked-metasurface simulator")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    /// `dotted.key=value`, repeatable.
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
    /// Worker threads for realizations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw and dump the channels of one realization.
    Channels {
        #[arg(long, default_value_t = 0)]
        realization: u64,
    },
    /// Train one realization and dump its trace and phases.
    Train {
        #[arg(long, default_value_t = 0)]
        realization: u64,
    },
    /// Multi-user separation experiment.
    Multiuser,
    /// Jamming-aware and jamming-agnostic experiments.
    Jamming,
    /// Sweep the axis given in the `[sweep]` table.
    Sweep,
    /// Run the built-in oracle checks.
    Validate,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Parse(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(dir) = &cli.out {
        let text = toml::Value::String(dir.to_string_lossy().into_owned()).to_string();
        overrides.push(format!("output.dir={text}"));
    }
    if let Some(grid) = &cli.snr {
        let items: Vec<String> = grid.iter().map(|v| format!("{v:?}")).collect();
        overrides.push(format!("evaluation.snr_db=[{}]", items.join(", ")));
    }
    match &cli.config {
        Some(p) => load_config(p, &overrides),
        None => RunConfig::from_toml(&RunConfig::default().to_toml()?, &overrides),
    }
}

fn say(cfg: &RunConfig, msg: &str) {
    if cfg.output.verbosity > 0 {
        eprintln!("{msg}");
    }
}

fn finish(cfg: &RunConfig, dir: &Path, started: Instant, files: &[PathBuf]) -> Result<()> {
    write_timings(dir, started.elapsed().as_secs_f64())?;
    if cfg.output.verbosity == 0 {
        return Ok(());
    }
    let mut out = std::io::stdout().lock();
    for f in files {
        if writeln!(out, "{}", f.display()).is_err() {
            break;
        }
    }
    Ok(())
}

fn cmd_channels(cfg: &RunConfig, index: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = cfg.scenario();
    let real = draw_realization(&scenario, index)?;
    let geom = build_geometry(&scenario.geometry)?;
    let dump = ChannelDump {
        wavelength: geom.wavelength,
        seed: real.seeds.channels,
        channels: real.channels,
    };
    std::fs::create_dir_all(dir)?;
    let mut files = vec![dir.join("channels.txt"), dir.join("phases_initial.txt")];
    std::fs::write(&files[0], dump.to_text())?;
    std::fs::write(&files[1], real.initial.to_text())?;
    let extra = json!({
        "realization": index,
        "seeds": real.seeds,
        "assignment": real.assignment.antenna_of_user,
        "positions": real.layout.users,
    });
    write_manifest(dir, &report::manifest("channels", cfg, &files, extra), &mut files)?;
    Ok(files)
}

fn cmd_train(cfg: &RunConfig, index: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let r = run_realization(&cfg.scenario(), index)?;
    std::fs::create_dir_all(dir)?;
    let mut files = vec![dir.join("training.csv"), dir.join("phases.txt")];
    std::fs::write(&files[0], r.train.to_csv())?;
    std::fs::write(&files[1], r.phases.to_text())?;
    say(
        cfg,
        &format!(
            "realization {index}: loss {:.3e} -> {:.3e} after {} episodes ({:?})",
            r.train.initial.mean,
            r.train.final_loss(),
            r.train.episodes_run,
            r.train.termination
        ),
    );
    let extra = json!({
        "realization": index,
        "seeds": r.seeds,
        "assignment": r.assignment,
        "initial_loss": r.train.initial.mean,
        "final_loss": r.train.final_loss(),
        "episodes_run": r.train.episodes_run,
        "termination": r.train.termination,
        "constellation_mse": r.constellation_mse,
    });
    write_manifest(dir, &report::manifest("train", cfg, &files, extra), &mut files)?;
    Ok(files)
}

fn cmd_multiuser(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let scenario = cfg.scenario().with_jamming(JammingMode::None);
    let rep = run_multiuser(&scenario)?;
    say(
        cfg,
        &format!(
            "multiuser: {} realizations, final loss {:.3e}, noise-free MSE {:.3e}",
            rep.count(),
            rep.final_loss.mean[0],
            rep.constellation_mse.mean[0]
        ),
    );
    std::fs::create_dir_all(dir)?;
    let first = &rep.realizations[0];
    let rb = &cfg.robustness;
    let dump = distance_robustness(&scenario, 0, &first.phases, rb.scale_range, rb.slots, first.seeds.constellation)?;
    let path = dir.join("distance_constellation.csv");
    std::fs::write(&path, dump.to_csv())?;
    write_experiment("multiuser", cfg, &rep, dir, vec![path])
}

fn cmd_jamming(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (mode, name) in [(JammingMode::Aware, "aware"), (JammingMode::Agnostic, "agnostic")] {
        let rep = run_jamming(&cfg.scenario().with_jamming(mode))?;
        say(
            cfg,
            &format!("jamming {name}: SER {:?}", rep.curves.ser.mean.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>()),
        );
        files.extend(write_experiment(&format!("jamming/{name}"), cfg, &rep, &dir.join(name), Vec::new())?);
    }
    Ok(files)
}

fn cmd_sweep(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| SimError::Config("the sweep command needs a [sweep] table".into()))?;
    let points = run_sweep(&cfg.scenario(), spec.axis, &spec.values)?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for p in &points {
        let sub = dir.join(format!("{}_{}", spec.axis.name(), p.value));
        files.extend(report::write_report(&p.report, &sub, &cfg.output.formats)?);
        say(
            cfg,
            &format!("{} = {}: noise-free MSE {:.3e}", spec.axis.name(), p.value, p.report.constellation_mse.mean[0]),
        );
    }
    for (name, body) in [
        ("sweep.csv", report::sweep_csv(&points)),
        ("sweep_summary.csv", report::sweep_summary_csv(&points)),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        files.push(p);
    }
    let extra = json!({ "axis": spec.axis, "values": spec.values });
    write_manifest(dir, &report::manifest("sweep", cfg, &files, extra), &mut files)?;
    Ok(files)
}

fn cmd_validate() -> std::result::Result<(), Failure> {
    let checks = crate::validate::run_suite();
    let passed = checks.iter().filter(|c| c.passed).count();
    for c in &checks {
        let _ = writeln!(
            std::io::stdout(),
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let _ = writeln!(std::io::stdout(), "validate: {passed}/{} checks passed", checks.len());
    if passed == checks.len() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} checks failed", checks.len() - passed)))
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    if let Command::Validate = cli.command {
        return cmd_validate();
    }
    let cfg = resolve_config(cli)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let started = Instant::now();
    let run = || -> Result<Vec<PathBuf>> {
        match cli.command {
            Command::Channels { realization } => cmd_channels(&cfg, realization, &dir),
            Command::Train { realization } => cmd_train(&cfg, realization, &dir),
            Command::Multiuser => cmd_multiuser(&cfg, &dir),
            Command::Jamming => cmd_jamming(&cfg, &dir),
            Command::Sweep => cmd_sweep(&cfg, &dir),
            Command::Validate => unreachable!(),
        }
    };
    let files = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(format!("--jobs {n}: {e}")))?
            .install(run)?,
        None => run()?,
    };
    finish(&cfg, &dir, started, &files)?;
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
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
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            eprintln!("{m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}
