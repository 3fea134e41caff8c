use rand::Rng;
use serde::Serialize;

use super::realization::draw_realization;
use super::Scenario;
use crate::error::{Result, SimError};
use crate::model::equivalent_channel;
use crate::phases::PhaseBook;
use crate::rng::seeded_rng;
use crate::signals::gen_frame;
use crate::CMat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstellationPoint {
    pub slot: usize,
    pub user: usize,
    pub re: f64,
    pub im: f64,
    pub ideal_re: f64,
    pub ideal_im: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstellationDump {
    pub points: Vec<ConstellationPoint>,
}

impl ConstellationDump {
    /// Slot-major listing of `received` (K x S) against `ideal`.
    pub fn from_matrices(received: &CMat, ideal: &CMat) -> Result<Self> {
        if received.shape() != ideal.shape() {
            return Err(SimError::Dimension("constellation shapes differ".into()));
        }
        let mut points = Vec::with_capacity(received.len());
        for slot in 0..received.ncols() {
            for user in 0..received.nrows() {
                let (r, s) = (received[(user, slot)], ideal[(user, slot)]);
                points.push(ConstellationPoint {
                    slot,
                    user,
                    re: r.re,
                    im: r.im,
                    ideal_re: s.re,
                    ideal_im: s.im,
                });
            }
        }
        Ok(Self { points })
    }

    /// CSV with columns `slot,user,re,im,ideal_re,ideal_im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,user,re,im,ideal_re,ideal_im\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.slot, p.user, p.re, p.im, p.ideal_re, p.ideal_im
            ));
        }
        out
    }
}

/// Noise-free payload through realization `index` with trained `phases`, where
/// every user's distance is rescaled per slot by a factor uniform in
/// `scale_range`. Angles and fast fading stay fixed, so user `k`'s channel
/// amplitude changes by `scale^(-gamma/2)`. Points are divided by `|d_kk|`,
/// putting the nominal constellation on the unit QPSK points.
pub fn distance_robustness(
    scenario: &Scenario,
    index: u64,
    phases: &PhaseBook,
    scale_range: (f64, f64),
    slots: usize,
    seed: u64,
) -> Result<ConstellationDump> {
    let (lo, hi) = scale_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "distance scale range ({lo}, {hi}) must be positive and ordered"
        )));
    }
    let real = draw_realization(scenario, index)?;
    let sel = equivalent_channel(&real.channels, phases)?.select(&real.assignment);
    let k = sel.matrix.nrows();
    let frame = gen_frame(k, slots, seed);
    let mut rng = seeded_rng(crate::rng::derive_seed(seed, "distance-scale", 0));
    let half_gamma = scenario.users.link.pathloss_exponent / 2.0;
    let mut scaled = frame.symbols.clone();
    for slot in 0..slots {
        for user in 0..k {
            let f = lo + (hi - lo) * rng.random::<f64>();
            scaled[(user, slot)] *= f.powf(-half_gamma);
        }
    }
    let mut r = &sel.matrix * scaled;
    for user in 0..k {
        let g = sel.matrix[(user, user)].norm();
        if g == 0.0 {
            return Err(SimError::ZeroNorm);
        }
        r.row_mut(user).scale_mut(1.0 / g);
    }
    ConstellationDump::from_matrices(&r, &frame.symbols)
}
