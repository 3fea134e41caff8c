use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentReport, Scenario};
use crate::error::{Result, SimError};

/// Scenario parameter varied by [`run_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Meta-atoms per layer; values must be perfect squares.
    Atoms,
    /// Phase quantizer resolution.
    Bits,
    Eta0,
    Beta,
    /// Circular standard deviation of the phase noise, radians.
    PhaseNoise,
    /// Nearest-neighbour coupling coefficient.
    Coupling,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Atoms => "atoms",
            Self::Bits => "bits",
            Self::Eta0 => "eta0",
            Self::Beta => "beta",
            Self::PhaseNoise => "phase_noise",
            Self::Coupling => "coupling",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        let integral = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as u64)
            } else {
                Err(SimError::InvalidParameter(format!("{} sweep needs positive integers, got {v}", self.name())))
            }
        };
        match self {
            Self::Atoms => {
                let n = integral(value)?;
                let side = (n as f64).sqrt().round() as u64;
                if side * side != n {
                    return Err(SimError::InvalidParameter(format!("{n} atoms do not form a square layer")));
                }
                s.geometry.atoms_x = side as usize;
                s.geometry.atoms_y = side as usize;
            }
            Self::Bits => s.impairments.quant_bits = Some(integral(value)? as u32),
            Self::Eta0 => s.training.eta0 = value,
            Self::Beta => s.training.beta = value,
            Self::PhaseNoise => s.impairments.phase_noise = Some(value),
            Self::Coupling => s.impairments.coupling = Some(value),
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub report: ExperimentReport,
}

/// Runs `base` once per value, in the given order. Every point keeps the
/// master seed, so all values see the same channels, pilots and payloads.
pub fn run_sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(SimError::InvalidParameter("sweep needs at least one value".into()));
    }
    let scenarios = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    scenarios
        .iter()
        .zip(values)
        .map(|(s, &value)| {
            Ok(SweepPoint {
                axis,
                value,
                report: run_experiment(s)?,
            })
        })
        .collect()
}
