//! QPSK symbols, pilots and payload frames, receiver noise, jamming waveforms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::seeded_rng;
use crate::{CMat, CVec};

/// Gray-mapped QPSK: the high bit picks the in-phase sign, the low bit the
/// quadrature sign (0 = positive). `0b00 -> (1 + j)/sqrt(2)`.
pub fn qpsk_modulate(bits: u8) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let re = if bits & 0b10 == 0 { a } else { -a };
    let im = if bits & 0b01 == 0 { a } else { -a };
    Complex64::new(re, im)
}

/// Quadrant decision; an exact zero component counts as positive.
pub fn qpsk_demodulate(y: Complex64) -> u8 {
    (u8::from(y.re < 0.0) << 1) | u8::from(y.im < 0.0)
}

/// Known symbols for `K` users over `U` slots.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFrame {
    /// `K x U` unit-power QPSK symbols.
    pub symbols: CMat,
    /// Two-bit label of each symbol.
    pub bits: DMatrix<u8>,
}

impl SymbolFrame {
    pub fn users(&self) -> usize {
        self.symbols.nrows()
    }
    pub fn slots(&self) -> usize {
        self.symbols.ncols()
    }
}

pub fn gen_frame(users: usize, slots: usize, seed: u64) -> SymbolFrame {
    let mut rng = seeded_rng(seed);
    let bits = DMatrix::from_fn(users, slots, |_, _| rng.random_range(0..4u8));
    let symbols = bits.map(qpsk_modulate);
    SymbolFrame { symbols, bits }
}

/// Circularly-symmetric complex Gaussian noise of total variance `variance`.
pub fn awgn(rows: usize, cols: usize, variance: f64, seed: u64) -> Result<CMat> {
    if !(variance >= 0.0) {
        return Err(SimError::InvalidParameter("noise variance must be non-negative".into()));
    }
    if variance == 0.0 {
        return Ok(CMat::zeros(rows, cols));
    }
    let mut rng = seeded_rng(seed);
    let sd = (variance / 2.0).sqrt();
    Ok(CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * sd, im * sd)
    }))
}

/// Variance of the Gaussian jammer source before amplification.
pub const JAMMER_BASE_VARIANCE: f64 = 0.5;

/// Range of the amplifier power drawn independently per slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JammerPower {
    pub p_min: f64,
    pub p_max: f64,
}

impl JammerPower {
    /// `[0.5, 1.5] * P_nominal` with `P_nominal = 10^(db / 10)`.
    pub fn from_nominal_db(db: f64) -> Self {
        let p = 10f64.powf(db / 10.0);
        Self {
            p_min: 0.5 * p,
            p_max: 1.5 * p,
        }
    }

    pub fn off() -> Self {
        Self { p_min: 0.0, p_max: 0.0 }
    }

    /// Expected transmitted jamming power per slot.
    pub fn mean_power(&self) -> f64 {
        JAMMER_BASE_VARIANCE * 0.5 * (self.p_min + self.p_max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JammerWaveform {
    pub samples: CVec,
    pub base_variance: f64,
    /// `sqrt(P_mu)` per slot.
    pub amplitude: Vec<f64>,
}

pub fn jammer_waveform(slots: usize, power: &JammerPower, seed: u64) -> Result<JammerWaveform> {
    if !(power.p_min >= 0.0 && power.p_max >= power.p_min) {
        return Err(SimError::InvalidParameter(
            "jammer power range must satisfy 0 <= p_min <= p_max".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let sd = (JAMMER_BASE_VARIANCE / 2.0).sqrt();
    let mut amplitude = Vec::with_capacity(slots);
    let samples = CVec::from_fn(slots, |_, _| {
        let p = power.p_min + (power.p_max - power.p_min) * rng.random::<f64>();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let a = p.sqrt();
        amplitude.push(a);
        Complex64::new(re * sd, im * sd) * a
    });
    Ok(JammerWaveform {
        samples,
        base_variance: JAMMER_BASE_VARIANCE,
        amplitude,
    })
}
