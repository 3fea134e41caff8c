//! Unstructured random instances for oracles and property checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelSet;
use crate::rng::seeded_rng;
use crate::{CMat, CVec};

fn cn(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// I.i.d. `CN(0, 1)` entries in every matrix of the stack.
pub fn gaussian_channels(
    users: usize,
    layers: usize,
    atoms: usize,
    antennas: usize,
    seed: u64,
    jammer: bool,
) -> ChannelSet {
    let mut rng = seeded_rng(seed);
    let h = CMat::from_fn(atoms, users, |_, _| cn(&mut rng));
    let inter_layer = (1..layers)
        .map(|_| CMat::from_fn(atoms, atoms, |_, _| cn(&mut rng)))
        .collect();
    let g = CMat::from_fn(antennas, atoms, |_, _| cn(&mut rng));
    let jammer = jammer.then(|| CVec::from_fn(atoms, |_, _| cn(&mut rng)));
    ChannelSet {
        h,
        inter_layer,
        g,
        jammer,
    }
}

/// `rows x cols` matrix of `CN(0, 1)` samples.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = seeded_rng(seed);
    CMat::from_fn(rows, cols, |_, _| cn(&mut rng))
}
