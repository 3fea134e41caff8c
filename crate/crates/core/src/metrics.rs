//! Link-level figures of merit.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::model::SelectedChannel;
use crate::signals::qpsk_demodulate;
use crate::CMat;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkMetrics {
    pub ser: f64,
    pub sum_rate: f64,
    pub constellation_mse: f64,
    pub sinr: Vec<f64>,
}

/// Noise variance that puts the average desired-signal power at the selected
/// antennas `snr_db` above the noise floor.
pub fn snr_to_noise_variance(snr_db: f64, sel: &SelectedChannel, frame_power: f64) -> Result<f64> {
    let k = sel.matrix.nrows();
    let p_sig = (0..k).map(|i| sel.matrix[(i, i)].norm_sqr()).sum::<f64>() / k as f64 * frame_power;
    if !(p_sig > 0.0) {
        return Err(SimError::UndefinedMetric("zero desired-signal power".into()));
    }
    Ok(p_sig / 10f64.powf(snr_db / 10.0))
}

/// Fraction of symbols whose demodulated bit pair differs from the label.
pub fn ser(received: &CMat, bits: &DMatrix<u8>) -> Result<f64> {
    if received.shape() != bits.shape() {
        return Err(SimError::Dimension(format!(
            "received {:?} vs labels {:?}",
            received.shape(),
            bits.shape()
        )));
    }
    Ok(symbol_errors(received, bits) as f64 / received.len() as f64)
}

pub(crate) fn symbol_errors(received: &CMat, bits: &DMatrix<u8>) -> usize {
    received
        .iter()
        .zip(bits.iter())
        .filter(|(y, &b)| qpsk_demodulate(**y) != b)
        .count()
}

/// Projects each slot (column) onto the unit sphere and rescales by `sqrt(K)`,
/// the same normalization the training loss uses.
pub fn normalize_slots(received: &CMat) -> CMat {
    let scale = (received.nrows() as f64).sqrt();
    let mut out = received.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col *= num_complex::Complex64::from(scale / n);
        }
    }
    out
}

/// Mean squared distance between normalized received symbols and the known
/// transmitted symbols.
pub fn constellation_mse(received_normalized: &CMat, ideal: &CMat) -> Result<f64> {
    if received_normalized.shape() != ideal.shape() {
        return Err(SimError::Dimension("constellation shapes differ".into()));
    }
    Ok((received_normalized - ideal).norm_squared() / ideal.len() as f64)
}

/// Per-user SINR on the selected channel and the resulting sum rate in bits/s/Hz.
pub fn sinr_and_sumrate(sel: &SelectedChannel, noise_variance: f64, jammer_mean_power: f64) -> Result<(Vec<f64>, f64)> {
    let d = &sel.matrix;
    let k = d.nrows();
    let mut sinr = Vec::with_capacity(k);
    for i in 0..k {
        let interference: f64 = (0..k).filter(|&j| j != i).map(|j| d[(i, j)].norm_sqr()).sum();
        let jam = sel.jammer.as_ref().map_or(0.0, |j| jammer_mean_power * j[i].norm_sqr());
        let denom = interference + jam + noise_variance;
        if denom == 0.0 {
            return Err(SimError::UndefinedMetric(format!(
                "user {i} has no interference, jamming or noise: SINR is unbounded"
            )));
        }
        sinr.push(d[(i, i)].norm_sqr() / denom);
    }
    let rate = sinr.iter().map(|s| (1.0 + s).log2()).sum();
    Ok((sinr, rate))
}
