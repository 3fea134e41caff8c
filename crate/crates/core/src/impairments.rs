//! Hardware imperfections applied to a trained stack at evaluation time:
//! finite phase resolution, inter-atom coupling, and phase-response noise.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Result, SimError};
use crate::model::{check_dims, propagate, source_field, split_equivalent, EquivalentChannel};
use crate::phases::{wrap_phase, PhaseBook};
use crate::rng::seeded_rng;
use crate::{CMat, CVec};

/// Coupling reaches this many neighbours on each side.
pub const COUPLING_BAND: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentConfig {
    #[serde(default)]
    pub quant_bits: Option<u32>,
    #[serde(default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub phase_noise: Option<f64>,
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.quant_bits {
            if b == 0 || b > 52 {
                return Err(SimError::InvalidParameter(format!("quantizer bits {b} outside 1..=52")));
            }
        }
        if let Some(a) = self.coupling {
            if !(0.0..1.0).contains(&a) {
                return Err(SimError::InvalidParameter(format!("coupling {a} outside [0, 1)")));
            }
        }
        if let Some(s) = self.phase_noise {
            if !(s >= 0.0) {
                return Err(SimError::InvalidParameter(format!("phase noise {s} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.quant_bits.is_none() && self.coupling.is_none() && self.phase_noise.is_none()
    }
}

/// Rounds every phase to the nearest multiple of `2 pi / 2^B` (halves away
/// from zero) and wraps back into `[0, 2 pi)`.
pub fn quantize_phases(pb: &PhaseBook, bits: u32) -> Result<PhaseBook> {
    if bits == 0 || bits > 52 {
        return Err(SimError::InvalidParameter(format!("quantizer bits {bits} outside 1..=52")));
    }
    let step = TAU / (1u64 << bits) as f64;
    Ok(pb.map(|p| (p / step).round() * step))
}

/// Banded symmetric Toeplitz matrix with `c_ij = alpha^|i - j|` inside the band.
pub fn coupling_matrix(n: usize, alpha: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        if d <= COUPLING_BAND {
            alpha.powi(d as i32)
        } else {
            0.0
        }
    })
}

/// Forward model with `C * Phi_l` in place of every `Phi_l`.
#[derive(Clone, Debug)]
pub struct CoupledModel<'a> {
    channels: &'a ChannelSet,
    coupling: CMat,
}

pub fn apply_coupling<'a>(ch: &'a ChannelSet, c: &DMatrix<f64>) -> Result<CoupledModel<'a>> {
    let n = ch.atoms();
    if c.shape() != (n, n) {
        return Err(SimError::Dimension(format!(
            "coupling matrix is {:?}, expected ({n}, {n})",
            c.shape()
        )));
    }
    Ok(CoupledModel {
        channels: ch,
        coupling: c.map(Complex64::from),
    })
}

impl CoupledModel<'_> {
    pub fn forward(&self, pb: &PhaseBook, s: &CVec, jam: Option<Complex64>) -> Result<CVec> {
        check_dims(self.channels, pb)?;
        let x0 = source_field(self.channels, s, jam)?;
        let x0 = CMat::from_column_slice(x0.len(), 1, x0.as_slice());
        let y = propagate(self.channels, pb, &x0, Some(&self.coupling));
        Ok(CVec::from_column_slice(y.as_slice()))
    }

    pub fn equivalent_channel(&self, pb: &PhaseBook) -> Result<EquivalentChannel> {
        check_dims(self.channels, pb)?;
        let composite = propagate(
            self.channels,
            pb,
            &self.channels.input_matrix(),
            Some(&self.coupling),
        );
        Ok(split_equivalent(self.channels, composite))
    }
}

/// `I_1(kappa) / I_0(kappa)`, the mean resultant length of a von Mises law.
pub fn mean_resultant_length(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    if kappa > 1e5 {
        let k = kappa;
        return 1.0 - 1.0 / (2.0 * k) - 1.0 / (8.0 * k * k) - 1.0 / (8.0 * k * k * k);
    }
    // backward recurrence on I_v / I_{v-1} = 1 / (2v / kappa + I_{v+1} / I_v)
    let top = (2.0 * kappa) as usize + 200;
    let mut r = 0.0;
    for v in (1..=top).rev() {
        r = 1.0 / (2.0 * v as f64 / kappa + r);
    }
    r
}

/// Concentration whose circular standard deviation `sqrt(-2 ln R)` equals `sigma`.
pub fn kappa_for_circular_std(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return f64::INFINITY;
    }
    if sigma < 1e-4 {
        return 1.0 / (sigma * sigma);
    }
    let target = (-sigma * sigma / 2.0).exp();
    let (mut lo, mut hi) = (-20.0f64, 20.0f64); // log10 kappa
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_resultant_length(10f64.powf(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    10f64.powf(0.5 * (lo + hi))
}

/// One von Mises(0, kappa) draw on `[-pi, pi)`.
pub fn sample_von_mises<R: Rng>(rng: &mut R, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    if kappa > 1e6 {
        let z: f64 = rng.sample(StandardNormal);
        return wrap_signed(z / kappa.sqrt());
    }
    // Best & Fisher rejection sampler
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return wrap_signed(if u3 > 0.5 { theta } else { -theta });
        }
    }
}

fn wrap_signed(x: f64) -> f64 {
    let w = wrap_phase(x + PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Adds i.i.d. zero-mean von Mises noise with circular standard deviation `sigma`.
pub fn von_mises_phase_noise(pb: &PhaseBook, sigma: f64, seed: u64) -> Result<PhaseBook> {
    if !(sigma >= 0.0) {
        return Err(SimError::InvalidParameter("phase noise must be >= 0".into()));
    }
    if sigma == 0.0 {
        return Ok(pb.clone());
    }
    let kappa = kappa_for_circular_std(sigma);
    let mut rng = seeded_rng(seed);
    let noisy: Vec<f64> = pb
        .values()
        .iter()
        .map(|&p| p + sample_von_mises(&mut rng, kappa))
        .collect();
    PhaseBook::from_values(pb.layers(), pb.atoms(), noisy)
}

/// Circular distance between two angles, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}
