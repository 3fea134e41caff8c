//! Layer-by-layer phase training on the normalized-symbol loss.
//!
//! The gradient for layer `l` splits the system into a prefix
//! `P_l` (sources to the field entering layer `l`) and a suffix `B_l`
//! (field leaving layer `l` to the selected antennas). Both are shared by every
//! pilot slot, so the per-slot work is `O(N K)` and a full-batch layer update
//! costs `O(N K U)` on top of an `O(N^2 K)` batch-independent setup.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Result, SimError};
use crate::model::{check_dims, scale_rows, AntennaAssignment};
use crate::phases::PhaseBook;
use crate::{CMat, CVec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Initial learning rate.
    pub eta0: f64,
    /// Per-episode multiplicative decay.
    pub beta: f64,
    /// Maximum number of episodes.
    pub max_episodes: usize,
    /// Stop once consecutive episode losses differ by less than this.
    pub tolerance: f64,
    /// Pilot slots.
    pub pilots: usize,
    /// Slots per gradient step; `None` uses the full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta0: 0.9,
            beta: 0.99,
            max_episodes: 200,
            tolerance: 1e-6,
            pilots: 64,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidParameter(m.into()));
        if !(self.eta0 > 0.0) {
            return bad("eta0 must be positive");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must lie in (0, 1]");
        }
        if !(self.tolerance >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        if self.pilots == 0 {
            return bad("at least one pilot slot is required");
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxEpisodes,
    LossDeltaBelowTolerance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossStats {
    pub mean: f64,
    /// Population standard deviation over the slots.
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainRecord {
    /// Batch loss before the first update.
    pub initial: LossStats,
    pub loss_mean: Vec<f64>,
    pub loss_std: Vec<f64>,
    pub eta: Vec<f64>,
    pub episodes_run: usize,
    pub termination: Termination,
}

impl TrainRecord {
    pub fn final_loss(&self) -> f64 {
        self.loss_mean.last().copied().unwrap_or(self.initial.mean)
    }

    /// CSV with columns `episode,loss_mean,loss_std,eta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,loss_mean,loss_std,eta\n");
        for t in 0..self.episodes_run {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                t + 1,
                self.loss_mean[t],
                self.loss_std[t],
                self.eta[t]
            ));
        }
        out
    }
}

/// `|| r/||r|| - s/||s|| ||^2`, in `[0, 4]`.
pub fn loss(received: &CVec, transmitted: &CVec) -> Result<f64> {
    if received.len() != transmitted.len() {
        return Err(SimError::Dimension("loss operands differ in length".into()));
    }
    let rn = received.norm();
    let sn = transmitted.norm();
    if rn == 0.0 || sn == 0.0 {
        return Err(SimError::ZeroNorm);
    }
    Ok(received
        .iter()
        .zip(transmitted.iter())
        .map(|(r, s)| (r / rn - s / sn).norm_sqr())
        .sum())
}

/// Loss of one slot and `q = dL/dr*`-style sensitivity, so that
/// `dL = Re(q^H dr)`.
fn slot_loss_and_sensitivity(r: &[Complex64], s: &[Complex64], q: &mut [Complex64]) -> Result<f64> {
    let rn = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let sn = s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if rn == 0.0 || sn == 0.0 {
        return Err(SimError::ZeroNorm);
    }
    // L = 2 - 2 Re(r^H v) / |r| with v = s/|s|
    let mut c = 0.0;
    let mut l = 0.0;
    for (ri, si) in r.iter().zip(s) {
        let vi = si / sn;
        c += (ri.conj() * vi).re;
        l += (ri / rn - vi).norm_sqr();
    }
    let rn3 = rn * rn * rn;
    for ((qi, ri), si) in q.iter_mut().zip(r).zip(s) {
        *qi = -2.0 * (si / (sn * rn) - ri * (c / rn3));
    }
    Ok(l)
}

fn stats(values: &[f64]) -> LossStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    LossStats {
        mean,
        std: var.sqrt(),
    }
}

/// Training data: pilot symbols (K x U), optional jamming samples (U) and
/// optional receiver noise at the selected antennas (K x U).
#[derive(Clone, Copy, Debug)]
pub struct PilotBatch<'a> {
    pub symbols: &'a CMat,
    pub jam: Option<&'a CVec>,
    pub noise: Option<&'a CMat>,
}

impl<'a> PilotBatch<'a> {
    pub fn clean(symbols: &'a CMat) -> Self {
        Self {
            symbols,
            jam: None,
            noise: None,
        }
    }

    pub fn with_jammer(mut self, jam: Option<&'a CVec>) -> Self {
        self.jam = jam;
        self
    }

    pub fn with_noise(mut self, noise: Option<&'a CMat>) -> Self {
        self.noise = noise;
        self
    }
}

/// Pilots stacked with the jamming samples (when present) as an extra source row,
/// plus the matching `[H, h_J]` input matrix.
struct Sources {
    input: CMat,
    z: CMat,
    noise: Option<CMat>,
}

impl Sources {
    fn received(&self, composite: CMat) -> CMat {
        let r = composite * &self.z;
        match &self.noise {
            Some(n) => r + n,
            None => r,
        }
    }
}

fn sources(ch: &ChannelSet, batch: &PilotBatch) -> Result<Sources> {
    let (pilots, jam) = (batch.symbols, batch.jam);
    let k = ch.users();
    let noise = match batch.noise {
        Some(n) if n.shape() != pilots.shape() => {
            return Err(SimError::Dimension("training noise must match the pilot matrix".into()))
        }
        n => n.cloned(),
    };
    if pilots.nrows() != k {
        return Err(SimError::Dimension(format!(
            "pilot matrix has {} rows, expected {k} users",
            pilots.nrows()
        )));
    }
    if pilots.ncols() == 0 {
        return Err(SimError::Dimension("no pilot slots".into()));
    }
    match jam {
        None => Ok(Sources {
            input: ch.h.clone(),
            z: pilots.clone(),
            noise,
        }),
        Some(j) => {
            let hj = ch
                .jammer
                .as_ref()
                .ok_or_else(|| SimError::Dimension("jamming waveform given but no jammer channel".into()))?;
            if j.len() != pilots.ncols() {
                return Err(SimError::Dimension(format!(
                    "jamming waveform has {} samples for {} slots",
                    j.len(),
                    pilots.ncols()
                )));
            }
            let mut input = ch.h.clone().insert_column(k, Complex64::new(0.0, 0.0));
            input.set_column(k, hj);
            let mut z = pilots.clone().insert_row(k, Complex64::new(0.0, 0.0));
            z.set_row(k, &j.transpose());
            Ok(Sources { input, z, noise })
        }
    }
}

/// Suffix matrices `B_l` (K x N) for every layer, from the current phases.
/// `out[l]` maps the field leaving layer `l` (0-based) to the selected antennas.
fn suffixes(ch: &ChannelSet, pb: &PhaseBook, assignment: &AntennaAssignment) -> Vec<CMat> {
    let layers = ch.layers();
    let mut out = vec![CMat::zeros(0, 0); layers];
    let mut b = assignment.pick_rows(&ch.g);
    for l in (0..layers).rev() {
        if l + 1 < layers {
            // B_l = B_{l+1} Phi_{l+1} W_{l+1}
            let mut bp = b.clone();
            let resp = pb.layer_response(l + 1);
            for (mut col, p) in bp.column_iter_mut().zip(&resp) {
                col *= *p;
            }
            b = bp * &ch.inter_layer[l];
        }
        out[l] = b.clone();
    }
    out
}

/// Gradient of the mean loss over the columns `range` of `z`, for the layer
/// whose incoming field is `prefix * z` and whose outgoing field reaches the
/// selected antennas through `suffix`. Also returns the per-slot losses.
fn batch_gradient(
    prefix: &CMat,
    suffix: &CMat,
    phase: &[Complex64],
    src: &Sources,
    pilots: &CMat,
    range: std::ops::Range<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let zb = src.z.columns(range.start, range.len());
    let mut x = prefix * zb;
    scale_rows(&mut x, phase);
    let mut r = suffix * &x;
    if let Some(n) = &src.noise {
        r += n.columns(range.start, range.len());
    }
    let k = r.nrows();
    let mut q = CMat::zeros(k, range.len());
    let mut losses = Vec::with_capacity(range.len());
    for (col, slot) in range.clone().enumerate() {
        let rc: Vec<Complex64> = r.column(col).iter().copied().collect();
        let sc: Vec<Complex64> = pilots.column(slot).iter().copied().collect();
        let mut qc = vec![Complex64::new(0.0, 0.0); k];
        losses.push(slot_loss_and_sensitivity(&rc, &sc, &mut qc)?);
        q.set_column(col, &CVec::from_vec(qc));
    }
    let back = suffix.adjoint() * q;
    let n = x.nrows();
    let inv = 1.0 / range.len() as f64;
    let mut grad = vec![0.0; n];
    for col in 0..range.len() {
        for (i, g) in grad.iter_mut().enumerate() {
            *g -= (x[(i, col)] * back[(i, col)].conj()).im;
        }
    }
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((grad, losses))
}

fn selected_composite(ch: &ChannelSet, pb: &PhaseBook, input: &CMat, assignment: &AntennaAssignment) -> CMat {
    let full = crate::model::propagate(ch, pb, input, None);
    assignment.pick_rows(&full)
}

fn check_assignment(ch: &ChannelSet, assignment: &AntennaAssignment) -> Result<()> {
    if assignment.users() != ch.users() || assignment.antenna_of_user.iter().any(|&m| m >= ch.antennas()) {
        return Err(SimError::Dimension("assignment does not match channel dimensions".into()));
    }
    Ok(())
}

fn slot_losses(r: &CMat, pilots: &CMat) -> Result<Vec<f64>> {
    (0..r.ncols())
        .map(|u| loss(&r.column(u).into_owned(), &pilots.column(u).into_owned()))
        .collect()
}

/// Mean and standard deviation of the per-slot loss over the pilot batch.
pub fn batch_loss(
    ch: &ChannelSet,
    pb: &PhaseBook,
    batch: &PilotBatch,
    assignment: &AntennaAssignment,
) -> Result<LossStats> {
    check_dims(ch, pb)?;
    check_assignment(ch, assignment)?;
    let src = sources(ch, batch)?;
    let e = selected_composite(ch, pb, &src.input, assignment);
    Ok(stats(&slot_losses(&src.received(e), batch.symbols)?))
}

/// Analytic gradient of the mean batch loss with respect to the phases of
/// layer `l` (1-based).
pub fn layer_gradient(
    ch: &ChannelSet,
    pb: &PhaseBook,
    batch: &PilotBatch,
    assignment: &AntennaAssignment,
    l: usize,
) -> Result<Vec<f64>> {
    check_dims(ch, pb)?;
    check_assignment(ch, assignment)?;
    if l == 0 || l > ch.layers() {
        return Err(SimError::LayerOutOfRange {
            index: l,
            layers: ch.layers(),
        });
    }
    let src = sources(ch, batch)?;
    let mut prefix = src.input.clone();
    for i in 1..l {
        scale_rows(&mut prefix, &pb.layer_response(i - 1));
        prefix = &ch.inter_layer[i - 1] * prefix;
    }
    let suffix = &suffixes(ch, pb, assignment)[l - 1];
    let (grad, _) = batch_gradient(
        &prefix,
        suffix,
        &pb.layer_response(l - 1),
        &src,
        batch.symbols,
        0..batch.symbols.ncols(),
    )?;
    Ok(grad)
}

/// `eta0 * beta^(t - 1)` for episode `t >= 1`.
pub fn lr_schedule(t: usize, eta0: f64, beta: f64) -> f64 {
    debug_assert!(t >= 1);
    eta0 * beta.powi(t as i32 - 1)
}

/// Gauss-Seidel gradient descent over layers.
///
/// Each episode sets the learning rate, sweeps layers `1..=L` updating each
/// with the phases already refreshed earlier in the same sweep, then records
/// the batch loss.
pub fn train(
    ch: &ChannelSet,
    batch: &PilotBatch,
    cfg: &TrainConfig,
    pb0: &PhaseBook,
    assignment: &AntennaAssignment,
) -> Result<(PhaseBook, TrainRecord)> {
    cfg.validate()?;
    check_dims(ch, pb0)?;
    check_assignment(ch, assignment)?;
    let src = sources(ch, batch)?;
    let pilots = batch.symbols;
    let slots = pilots.ncols();
    let batch = cfg.batch_size.unwrap_or(slots).min(slots);
    let chunks: Vec<std::ops::Range<usize>> = (0..slots)
        .step_by(batch)
        .map(|a| a..(a + batch).min(slots))
        .collect();

    let mut pb = pb0.clone();
    let initial = stats(&slot_losses(
        &src.received(selected_composite(ch, &pb, &src.input, assignment)),
        pilots,
    )?);
    let mut record = TrainRecord {
        initial,
        loss_mean: Vec::new(),
        loss_std: Vec::new(),
        eta: Vec::new(),
        episodes_run: 0,
        termination: Termination::MaxEpisodes,
    };

    let layers = ch.layers();
    for t in 1..=cfg.max_episodes {
        let eta = lr_schedule(t, cfg.eta0, cfg.beta);
        let suffix = suffixes(ch, &pb, assignment);
        let mut prefix = src.input.clone();
        for l in 0..layers {
            if l > 0 {
                scale_rows(&mut prefix, &pb.layer_response(l - 1));
                prefix = &ch.inter_layer[l - 1] * prefix;
            }
            for range in &chunks {
                let (grad, _) = batch_gradient(
                    &prefix,
                    &suffix[l],
                    &pb.layer_response(l),
                    &src,
                    pilots,
                    range.clone(),
                )?;
                let step: Vec<f64> = grad.iter().map(|g| -eta * g).collect();
                pb.shift_layer(l, &step);
            }
        }
        // composite after the sweep: B_L Phi_L P_L
        let mut last = prefix;
        scale_rows(&mut last, &pb.layer_response(layers - 1));
        let e = &suffix[layers - 1] * last;
        let st = stats(&slot_losses(&src.received(e), pilots)?);

        let prev = record.loss_mean.last().copied();
        record.loss_mean.push(st.mean);
        record.loss_std.push(st.std);
        record.eta.push(eta);
        record.episodes_run = t;
        if let Some(p) = prev {
            if (st.mean - p).abs() < cfg.tolerance {
                record.termination = Termination::LossDeltaBelowTolerance;
                break;
            }
        }
    }
    Ok((pb, record))
}

/// Operation-count model of one layer update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexityEstimate {
    /// Batch-dependent work, linear in `N` and `U`.
    pub per_layer_flops_estimate: f64,
    /// Prefix/suffix refresh shared by all slots, independent of `U`.
    pub shared_setup_flops: f64,
}

/// Flop model of [`train`]'s per-layer step for `atoms` N, `users` K,
/// `sources` (K, or K + 1 with a jammer) and `pilots` U. Complex
/// multiply-accumulate counted as 8 real flops.
pub fn complexity_probe(atoms: usize, users: usize, sources: usize, pilots: usize) -> ComplexityEstimate {
    let (n, k, c, u) = (atoms as f64, users as f64, sources as f64, pilots as f64);
    ComplexityEstimate {
        // incoming field, phase, forward to antennas, back-projection, gradient
        per_layer_flops_estimate: n * u * (8.0 * c + 6.0 + 8.0 * k + 8.0 * k + 4.0),
        shared_setup_flops: 8.0 * n * n * (c + k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_channels, random_pilots};

    fn v(xs: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(xs.len(), xs.iter().map(|&(a, b)| Complex64::new(a, b)))
    }

    #[test]
    fn loss_reference_values() {
        let s = v(&[(1.0, 2.0), (-0.5, 0.3)]);
        assert!(loss(&s, &s).unwrap().abs() < 1e-15);
        assert!((loss(&(-&s), &s).unwrap() - 4.0).abs() < 1e-14);
        let a = v(&[(1.0, 0.0), (0.0, 0.0)]);
        let b = v(&[(0.0, 0.0), (0.0, 1.0)]);
        assert!((loss(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(loss(&CVec::zeros(2), &s), Err(SimError::ZeroNorm)));
    }

    #[test]
    fn lr_schedule_values() {
        assert_eq!(lr_schedule(1, 0.7, 0.9), 0.7);
        assert!((lr_schedule(2, 0.8, 0.99) - 0.792).abs() < 1e-15);
        assert!((lr_schedule(101, 0.8, 0.97) - 0.8 * 0.97f64.powi(100)).abs() < 1e-15);
        assert!((lr_schedule(101, 0.8, 0.97) - 0.038042006340).abs() < 1e-11);
    }

    #[test]
    fn single_slot_has_zero_std() {
        let ch = random_channels(2, 2, 5, 3, 1, false);
        let pb = PhaseBook::random(2, 5, 2);
        let pilots = random_pilots(2, 1, 3);
        let st = batch_loss(&ch, &pb, &PilotBatch::clean(&pilots), &AntennaAssignment::identity(2)).unwrap();
        assert_eq!(st.std, 0.0);
    }

    #[test]
    fn zero_episodes_return_initial_phases() {
        let ch = random_channels(2, 2, 5, 3, 1, false);
        let pb = PhaseBook::random(2, 5, 2);
        let pilots = random_pilots(2, 8, 3);
        let cfg = TrainConfig {
            max_episodes: 0,
            ..TrainConfig::default()
        };
        let (out, rec) = train(&ch, &PilotBatch::clean(&pilots), &cfg, &pb, &AntennaAssignment::identity(2)).unwrap();
        assert_eq!(out, pb);
        assert_eq!(rec.episodes_run, 0);
        assert!(rec.loss_mean.is_empty() && rec.eta.is_empty());
    }

    #[test]
    fn infinite_tolerance_stops_after_second_episode() {
        let ch = random_channels(2, 2, 5, 3, 1, false);
        let pb = PhaseBook::random(2, 5, 2);
        let pilots = random_pilots(2, 8, 3);
        let cfg = TrainConfig {
            tolerance: f64::INFINITY,
            ..TrainConfig::default()
        };
        let (_, rec) = train(&ch, &PilotBatch::clean(&pilots), &cfg, &pb, &AntennaAssignment::identity(2)).unwrap();
        assert_eq!(rec.episodes_run, 2);
        assert_eq!(rec.termination, Termination::LossDeltaBelowTolerance);
        assert_eq!(rec.loss_mean.len(), 2);
    }

    #[test]
    fn noise_shifts_the_loss_and_is_shape_checked() {
        let ch = random_channels(2, 2, 5, 3, 1, false);
        let pb = PhaseBook::random(2, 5, 2);
        let pilots = random_pilots(2, 8, 3);
        let a = AntennaAssignment::identity(2);
        let clean = batch_loss(&ch, &pb, &PilotBatch::clean(&pilots), &a).unwrap();
        let noise = random_pilots(2, 8, 4) * Complex64::new(1e-3, 0.0);
        let noisy = batch_loss(&ch, &pb, &PilotBatch::clean(&pilots).with_noise(Some(&noise)), &a).unwrap();
        assert!(noisy.mean != clean.mean);
        let wrong = random_pilots(2, 7, 4);
        assert!(batch_loss(&ch, &pb, &PilotBatch::clean(&pilots).with_noise(Some(&wrong)), &a).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { eta0: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { beta: 1.5, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { beta: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { pilots: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: Some(0), ..ok }.validate().is_err());
    }

    #[test]
    fn complexity_model_is_linear_in_atoms_and_pilots() {
        let a = complexity_probe(32, 4, 4, 64);
        let b = complexity_probe(64, 4, 4, 64);
        let c = complexity_probe(32, 4, 4, 128);
        assert!((b.per_layer_flops_estimate / a.per_layer_flops_estimate - 2.0).abs() < 1e-12);
        assert!((c.per_layer_flops_estimate / a.per_layer_flops_estimate - 2.0).abs() < 1e-12);
        assert_eq!(a.shared_setup_flops, c.shared_setup_flops);
    }

    #[test]
    fn csv_has_declared_columns() {
        let rec = TrainRecord {
            initial: LossStats { mean: 1.0, std: 0.0 },
            loss_mean: vec![0.5],
            loss_std: vec![0.1],
            eta: vec![0.9],
            episodes_run: 1,
            termination: Termination::MaxEpisodes,
        };
        let csv = rec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("episode,loss_mean,loss_std,eta"));
        assert!(lines.next().unwrap().starts_with("1,5.0000000000000000e-1,"));
    }
}
