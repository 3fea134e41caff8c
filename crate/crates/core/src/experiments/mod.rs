//! End-to-end studies: multi-user separation, jamming, parameter sweeps and
//! payload distance robustness, each averaged over channel realizations.
//!
//! Realizations run concurrently on the rayon pool and are collected in index
//! order, so reports do not depend on the thread count.

mod aggregate;
mod realization;
mod robustness;
mod sweep;

pub use aggregate::{monte_carlo_aggregate, pad_trace, Aggregate};
pub use realization::{draw_realization, run_realization, LinkPoint, Realization, RealizationResult, RealizationSeeds};
pub use robustness::{distance_robustness, ConstellationDump, ConstellationPoint};
pub use sweep::{run_sweep, SweepAxis, SweepPoint};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{LinkParams, PlacementRegion};
use crate::diagonality::DiagonalityMetrics;
use crate::error::{Result, SimError};
use crate::geometry::GeometryParams;
use crate::impairments::ImpairmentConfig;
use crate::signals::JammerPower;
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammingMode {
    None,
    /// Trained on jammer-corrupted pilots.
    Aware,
    /// Trained on clean pilots, evaluated under jamming.
    Agnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersSpec {
    pub count: usize,
    #[serde(default)]
    pub region: PlacementRegion,
    #[serde(default)]
    pub link: LinkParams,
}

impl Default for UsersSpec {
    fn default() -> Self {
        Self {
            count: 4,
            region: PlacementRegion::default(),
            link: LinkParams::default(),
        }
    }
}

/// Jammer definition. Its position is redrawn per realization from `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammingSpec {
    pub mode: JammingMode,
    /// Nominal jammer receive power at the first layer relative to the mean
    /// per-user receive power, dB.
    #[serde(default)]
    pub jsr_db: f64,
    /// Per-slot power is uniform in `[lo, hi]` times the nominal power.
    #[serde(default = "default_power_spread")]
    pub power_spread: (f64, f64),
    #[serde(default)]
    pub region: PlacementRegion,
    #[serde(default)]
    pub link: LinkParams,
}

fn default_power_spread() -> (f64, f64) {
    (0.5, 1.5)
}

impl Default for JammingSpec {
    fn default() -> Self {
        Self {
            mode: JammingMode::None,
            jsr_db: 0.0,
            power_spread: default_power_spread(),
            region: PlacementRegion::default(),
            link: LinkParams::default(),
        }
    }
}

impl JammingSpec {
    pub fn power(&self) -> JammerPower {
        let nominal = 10f64.powf(self.jsr_db / 10.0);
        JammerPower {
            p_min: self.power_spread.0 * nominal,
            p_max: self.power_spread.1 * nominal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: GeometryParams,
    pub users: UsersSpec,
    pub training: TrainConfig,
    /// Receiver SNR of the training pilots; `None` trains noise-free.
    #[serde(default)]
    pub training_snr_db: Option<f64>,
    pub jamming: JammingSpec,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub payload_slots: usize,
    /// Slots in the noise-free constellation dump.
    pub constellation_slots: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            geometry: GeometryParams::default(),
            users: UsersSpec::default(),
            training: TrainConfig::default(),
            training_snr_db: None,
            jamming: JammingSpec::default(),
            impairments: ImpairmentConfig::default(),
            snr_db: vec![0.0, 4.0, 8.0, 12.0, 16.0],
            realizations: 8,
            payload_slots: 4096,
            constellation_slots: 256,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidParameter(m));
        if self.realizations == 0 || self.payload_slots == 0 {
            return bad("realizations and payload slots must be at least 1".into());
        }
        if self.users.count == 0 {
            return bad("at least one user is required".into());
        }
        if self.users.count > self.geometry.bs_antennas {
            return Err(SimError::TooFewAntennas {
                needed: self.users.count,
                available: self.geometry.bs_antennas,
            });
        }
        let (lo, hi) = self.jamming.power_spread;
        if !(lo >= 0.0 && hi >= lo) {
            return bad(format!("jammer power spread ({lo}, {hi}) must satisfy 0 <= lo <= hi"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("SNR grid entries must be finite".into());
        }
        self.training.validate()?;
        self.impairments.validate()
    }

    pub fn with_jamming(&self, mode: JammingMode) -> Self {
        let mut s = self.clone();
        s.jamming.mode = mode;
        s
    }
}

/// Realization-averaged SNR-grid metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnrCurves {
    pub snr_db: Vec<f64>,
    pub ser: Aggregate,
    pub sum_rate: Aggregate,
    pub mse: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub realizations: Vec<RealizationResult>,
    /// Per-episode mean loss across realizations; shorter traces are held at
    /// their final value.
    pub convergence: Aggregate,
    pub eta: Vec<f64>,
    pub constellation_mse: Aggregate,
    pub final_loss: Aggregate,
    pub curves: SnrCurves,
    /// Entry `l` averages the metrics of the channel truncated after layer `l + 1`.
    pub diagonality: Vec<Option<DiagonalityMetrics>>,
}

impl ExperimentReport {
    pub fn count(&self) -> usize {
        self.realizations.len()
    }
}

fn mean_diagonality(rs: &[RealizationResult]) -> Result<Vec<Option<DiagonalityMetrics>>> {
    let layers = rs.first().map_or(0, |r| r.diagonality.len());
    let mut out = Vec::with_capacity(layers);
    for l in 0..layers {
        let ms: Option<Vec<DiagonalityMetrics>> = rs.iter().map(|r| r.diagonality[l]).collect();
        out.push(match ms {
            None => None,
            Some(ms) => {
                let field = |f: fn(&DiagonalityMetrics) -> f64| -> Result<f64> {
                    Ok(monte_carlo_aggregate(&ms.iter().map(|m| vec![f(m)]).collect::<Vec<_>>())?.mean[0])
                };
                Some(DiagonalityMetrics {
                    avg_diag_power: field(|m| m.avg_diag_power)?,
                    avg_offdiag_power: field(|m| m.avg_offdiag_power)?,
                    diag_variance: field(|m| m.diag_variance)?,
                    diag_variance_db: field(|m| m.diag_variance_db)?,
                    offdiag_suppression_db: field(|m| m.offdiag_suppression_db)?,
                })
            }
        });
    }
    Ok(out)
}

/// Runs every realization of `scenario` as configured and aggregates them.
pub fn run_experiment(scenario: &Scenario) -> Result<ExperimentReport> {
    scenario.validate()?;
    let realizations = (0..scenario.realizations as u64)
        .into_par_iter()
        .map(|i| run_realization(scenario, i))
        .collect::<Result<Vec<_>>>()?;
    aggregate_report(scenario, realizations)
}

fn aggregate_report(scenario: &Scenario, realizations: Vec<RealizationResult>) -> Result<ExperimentReport> {
    let longest = realizations.iter().map(|r| r.train.episodes_run).max().unwrap_or(0);
    let traces: Vec<Vec<f64>> = realizations.iter().map(|r| pad_trace(&r.train, longest)).collect();
    let convergence = monte_carlo_aggregate(&traces)?;
    let eta = (1..=longest)
        .map(|t| crate::training::lr_schedule(t, scenario.training.eta0, scenario.training.beta))
        .collect();
    let scalar = |f: &dyn Fn(&RealizationResult) -> f64| {
        monte_carlo_aggregate(&realizations.iter().map(|r| vec![f(r)]).collect::<Vec<_>>())
    };
    let constellation_mse = scalar(&|r| r.constellation_mse)?;
    let final_loss = scalar(&|r| r.train.final_loss())?;
    let grid = |f: fn(&LinkPoint) -> f64| {
        monte_carlo_aggregate(
            &realizations
                .iter()
                .map(|r| r.points.iter().map(f).collect())
                .collect::<Vec<_>>(),
        )
    };
    let curves = SnrCurves {
        snr_db: scenario.snr_db.clone(),
        ser: grid(|p| p.ser)?,
        sum_rate: grid(|p| p.sum_rate)?,
        mse: grid(|p| p.mse)?,
    };
    let diagonality = mean_diagonality(&realizations)?;
    Ok(ExperimentReport {
        scenario: scenario.clone(),
        realizations,
        convergence,
        eta,
        constellation_mse,
        final_loss,
        curves,
        diagonality,
    })
}

/// Multi-user separation without a jammer.
pub fn run_multiuser(scenario: &Scenario) -> Result<ExperimentReport> {
    if scenario.jamming.mode != JammingMode::None {
        return Err(SimError::InvalidParameter(
            "multi-user runs require jamming mode `none`".into(),
        ));
    }
    run_experiment(scenario)
}

/// Jamming-aware or jamming-agnostic run, as selected by `scenario.jamming.mode`.
pub fn run_jamming(scenario: &Scenario) -> Result<ExperimentReport> {
    if scenario.jamming.mode == JammingMode::None {
        return Err(SimError::InvalidParameter(
            "jamming runs require mode `aware` or `agnostic`".into(),
        ));
    }
    run_experiment(scenario)
}
