use learnable_sim::diagonality::diagonality_metrics;
use learnable_sim::rng::{derive_seed, seeded_rng};
use learnable_sim::synthetic::{gaussian_channels, gaussian_matrix};
use learnable_sim::training::{batch_loss, layer_gradient, loss};
use learnable_sim::{
    assign_antennas, equivalent_channel, forward, train, AntennaAssignment, ChannelSet, CMat, CVec,
    EquivalentChannel, PhaseBook, PilotBatch, TrainConfig,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

/// `G Phi_L W_L ... Phi_1 [H, h_J]` multiplied out explicitly.
fn composed(ch: &ChannelSet, pb: &PhaseBook) -> CMat {
    let diag = |l: usize| CMat::from_diagonal(&CVec::from_iterator(pb.atoms(), pb.layer_response(l)));
    let mut m = diag(0) * ch.input_matrix();
    for l in 1..pb.layers() {
        m = diag(l) * &ch.inter_layer[l - 1] * m;
    }
    &ch.g * m
}

#[test]
fn equivalent_channel_matches_explicit_product() {
    let ch = gaussian_channels(3, 4, 10, 5, 1, true);
    let pb = PhaseBook::random(4, 10, 2);
    let eq = equivalent_channel(&ch, &pb).unwrap();
    let m = composed(&ch, &pb);
    let full = m.columns(0, 3).into_owned();
    assert!((&eq.full - &full).norm() < 1e-12 * full.norm());
    assert!((eq.jammer.unwrap() - m.column(3)).norm() < 1e-12 * full.norm());
}

#[test]
fn forward_matches_explicit_product_on_random_inputs() {
    let ch = gaussian_channels(4, 3, 12, 6, 3, true);
    let pb = PhaseBook::random(3, 12, 4);
    let m = composed(&ch, &pb);
    for i in 0..100u64 {
        let s: CVec = gaussian_matrix(4, 1, 10 + i).column(0).into_owned();
        let j = Complex64::new(0.2, -0.4);
        let mut x = s.clone().insert_row(4, j);
        x[4] = j;
        let want = &m * &x;
        let got = forward(&ch, &pb, &s, Some(j)).unwrap();
        assert!((&got - &want).norm() < 1e-12 * want.norm());
    }
}

#[test]
fn zero_phases_make_a_flat_toy_uniform() {
    // every link equal: all entries of the equivalent channel coincide
    let one = Complex64::new(0.7, 0.1);
    let ch = ChannelSet {
        h: CMat::from_element(2, 2, one),
        inter_layer: vec![CMat::from_element(2, 2, one)],
        g: CMat::from_element(2, 2, one),
        jammer: None,
    };
    let eq = equivalent_channel(&ch, &PhaseBook::zeros(2, 2)).unwrap();
    let first = eq.full[(0, 0)];
    assert!(eq.full.iter().all(|c| (c - first).norm() < 1e-15));
}

fn brute_force(mag: &CMat) -> Vec<usize> {
    let (m, k) = mag.shape();
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut perm = vec![0usize; k];
    // enumerate all k-tuples of antennas, keep the injective ones
    let total = m.pow(k as u32);
    for code in 0..total {
        let mut c = code;
        for p in perm.iter_mut() {
            *p = c % m;
            c /= m;
        }
        let mut seen = vec![false; m];
        if perm.iter().any(|&a| std::mem::replace(&mut seen[a], true)) {
            continue;
        }
        let v: f64 = perm.iter().enumerate().map(|(u, &a)| mag[(a, u)].norm()).sum();
        if v > best.0 + 1e-12 {
            best = (v, perm.clone());
        }
    }
    best.1
}

#[test]
fn assignment_matches_exhaustive_search() {
    for k in 1..=6usize {
        for trial in 0..5u64 {
            let m = k + (trial as usize % 3);
            let full = gaussian_matrix(m, k, derive_seed(11, "assign", 100 * k as u64 + trial));
            let got = assign_antennas(&EquivalentChannel { full: full.clone(), jammer: None }).unwrap();
            let want = brute_force(&full);
            let score = |a: &[usize]| a.iter().enumerate().map(|(u, &x)| full[(x, u)].norm()).sum::<f64>();
            assert!((score(&got.antenna_of_user) - score(&want)).abs() < 1e-12, "K={k} M={m}");
        }
    }
}

#[test]
fn two_user_assignment_examples() {
    let re = |rows: [[f64; 2]; 2]| CMat::from_fn(2, 2, |i, j| Complex64::new(rows[i][j], 0.0));
    let a = |m: CMat| assign_antennas(&EquivalentChannel { full: m, jammer: None }).unwrap().antenna_of_user;
    assert_eq!(a(re([[1.0, 0.1], [0.2, 2.0]])), vec![0, 1]);
    assert_eq!(a(re([[0.1, 1.0], [1.0, 0.1]])), vec![1, 0]);
}

#[test]
fn diagonal_variance_by_hand() {
    let d = CMat::from_diagonal(&CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)]));
    let m = diagonality_metrics(&d).unwrap();
    let (a, b) = (1.0 / 10f64.sqrt(), 3.0 / 10f64.sqrt());
    let mean = (a + b) / 2.0;
    let var = ((a - mean).powi(2) + (b - mean).powi(2)) / 2.0;
    assert!((m.diag_variance - var).abs() < 1e-15);
    assert_eq!(m.avg_offdiag_power, 0.0);
}

#[test]
fn batch_loss_matches_slot_by_slot_recomputation() {
    let ch = gaussian_channels(2, 2, 6, 3, 21, false);
    let pb = PhaseBook::random(2, 6, 22);
    let pilots = gaussian_matrix(2, 9, 23);
    let a = AntennaAssignment::new(vec![2, 0], 3).unwrap();
    let mean: f64 = (0..9)
        .map(|u| {
            let s = pilots.column(u).into_owned();
            loss(&a.pick(&forward(&ch, &pb, &s, None).unwrap()), &s).unwrap()
        })
        .sum::<f64>()
        / 9.0;
    let got = batch_loss(&ch, &pb, &PilotBatch::clean(&pilots), &a).unwrap().mean;
    assert!((got - mean).abs() < 1e-12);
}

#[test]
fn scalar_gradient_matches_finite_difference() {
    let ch = gaussian_channels(1, 1, 1, 1, 31, false);
    let pilots = gaussian_matrix(1, 4, 32);
    let a = AntennaAssignment::identity(1);
    let batch = PilotBatch::clean(&pilots);
    let f = |p: f64| batch_loss(&ch, &PhaseBook::from_values(1, 1, vec![p]).unwrap(), &batch, &a).unwrap().mean;
    for p in [0.1, 1.0, 2.5, 5.0] {
        let g = layer_gradient(&ch, &PhaseBook::from_values(1, 1, vec![p]).unwrap(), &batch, &a, 1).unwrap()[0];
        let fd = (f(p + 1e-5) - f(p - 1e-5)) / 2e-5;
        assert!((g - fd).abs() < 1e-6, "{g} vs {fd}");
    }
}

#[test]
fn small_instance_gradient_entries() {
    let ch = gaussian_channels(2, 2, 8, 2, 41, false);
    let pb = PhaseBook::random(2, 8, 42);
    let pilots = gaussian_matrix(2, 16, 43);
    let a = AntennaAssignment::identity(2);
    let batch = PilotBatch::clean(&pilots);
    let f = |p: &PhaseBook| batch_loss(&ch, p, &batch, &a).unwrap().mean;
    let mut worst = 0.0f64;
    for l in 1..=2 {
        let g = layer_gradient(&ch, &pb, &batch, &a, l).unwrap();
        for n in 0..8 {
            let (mut p, mut q) = (pb.clone(), pb.clone());
            p.set(l - 1, n, pb.get(l - 1, n) + 1e-5);
            q.set(l - 1, n, pb.get(l - 1, n) - 1e-5);
            let fd = (f(&p) - f(&q)) / 2e-5;
            worst = worst.max((g[n] - fd).abs() / fd.abs().max(1e-8));
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn reference_training_run() {
    let ch = gaussian_channels(2, 3, 16, 2, 51, false);
    let pb0 = PhaseBook::random(3, 16, 52);
    let pilots = gaussian_matrix(2, 32, 53);
    let cfg = TrainConfig { eta0: 0.5, beta: 0.99, max_episodes: 200, pilots: 32, ..TrainConfig::default() };
    let a = AntennaAssignment::identity(2);
    let batch = PilotBatch::clean(&pilots);
    let (pb, rec) = train(&ch, &batch, &cfg, &pb0, &a).unwrap();
    assert!(rec.final_loss() < 1e-2 && rec.final_loss() < rec.initial.mean / 10.0, "{rec:?}");
    assert!(pb.values().iter().all(|p| (0.0..std::f64::consts::TAU).contains(p)));
    let (again, rec2) = train(&ch, &batch, &cfg, &pb0, &a).unwrap();
    assert_eq!(pb, again);
    assert_eq!(rec, rec2);
}

proptest! {
    #[test]
    fn loss_is_bounded_and_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3, d in 1e-3f64..1e3) {
        let mut rng = seeded_rng(seed);
        let r: CVec = gaussian_matrix(3, 1, rng.random()).column(0).into_owned();
        let s: CVec = gaussian_matrix(3, 1, rng.random()).column(0).into_owned();
        let base = loss(&r, &s).unwrap();
        prop_assert!((0.0..=4.0).contains(&base));
        let scaled = loss(&(&r * Complex64::from(c)), &(&s * Complex64::from(d))).unwrap();
        prop_assert!((scaled - base).abs() < 1e-12);
    }

    #[test]
    fn phases_stay_canonical_after_training(seed in any::<u64>()) {
        let ch = gaussian_channels(2, 2, 5, 3, seed, false);
        let pilots = gaussian_matrix(2, 6, seed ^ 1);
        let cfg = TrainConfig { max_episodes: 5, pilots: 6, eta0: 3.0, ..TrainConfig::default() };
        let (pb, _) = train(&ch, &PilotBatch::clean(&pilots), &cfg, &PhaseBook::random(2, 5, seed), &AntennaAssignment::identity(2)).unwrap();
        prop_assert!(pb.values().iter().all(|p| (0.0..std::f64::consts::TAU).contains(p)));
    }
}
