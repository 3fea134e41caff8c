//! Runtime self-checks behind `simctl validate`: each check compares an
//! implementation against an independent oracle on seeded random instances.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::assign::assign_antennas;
use crate::channel::synthesize_channels;
use crate::error::Result;
use crate::experiments::{run_experiment, Scenario, UsersSpec};
use crate::geometry::{build_geometry, GeometryParams};
use crate::impairments::{circular_distance, coupling_matrix, quantize_phases, von_mises_phase_noise, COUPLING_BAND};
use crate::model::{equivalent_channel, forward, AntennaAssignment, EquivalentChannel};
use crate::phases::PhaseBook;
use crate::rng::{derive_seed, seeded_rng};
use crate::signals::{awgn, gen_frame, jammer_waveform, qpsk_demodulate, qpsk_modulate, JammerPower};
use crate::synthetic::{gaussian_channels, gaussian_matrix};
use crate::training::{batch_loss, layer_gradient, loss, PilotBatch, TrainConfig};
use crate::{CMat, CVec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Central finite difference of the mean batch loss along every phase of layer `l` (1-based).
pub fn finite_difference_gradient(
    ch: &crate::ChannelSet,
    pb: &PhaseBook,
    batch: &PilotBatch,
    assignment: &AntennaAssignment,
    l: usize,
    step: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pb.atoms());
    for n in 0..pb.atoms() {
        let base = pb.get(l - 1, n);
        let mut plus = pb.clone();
        plus.set(l - 1, n, base + step);
        let mut minus = pb.clone();
        minus.set(l - 1, n, base - step);
        let f = |p: &PhaseBook| batch_loss(ch, p, batch, assignment).map(|s| s.mean);
        out.push((f(&plus)? - f(&minus)?) / (2.0 * step));
    }
    Ok(out)
}

/// Elementwise relative error, each denominator floored at `1e-3` of the
/// largest reference magnitude so that near-zero entries are judged on scale.
pub fn gradient_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * scale.max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / r.abs().max(floor))
        .fold(0.0, f64::max)
}

fn check(name: &'static str, f: impl FnOnce() -> std::result::Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check { name, passed: true, detail },
        Err(detail) => Check { name, passed: false, detail },
    }
}

fn ensure(ok: bool, msg: String) -> std::result::Result<String, String> {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e2s<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn gradient() -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for i in 0..6u64 {
        let mut rng = seeded_rng(derive_seed(7, "validate-gradient", i));
        let (k, l, n) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(2..=32));
        let m = k + rng.random_range(0..=3);
        let u = rng.random_range(1..=16);
        let jam = i % 2 == 1;
        let ch = gaussian_channels(k, l, n, m, rng.random(), jam);
        let pb = PhaseBook::random(l, n, rng.random());
        let pilots = gaussian_matrix(k, u, rng.random());
        let w: CVec = gaussian_matrix(u, 1, rng.random()).column(0).into_owned();
        let batch = PilotBatch::clean(&pilots).with_jammer(jam.then_some(&w));
        let a = AntennaAssignment::identity(k);
        for layer in 1..=l {
            let g = e2s(layer_gradient(&ch, &pb, &batch, &a, layer))?;
            let fd = e2s(finite_difference_gradient(&ch, &pb, &batch, &a, layer, 1e-5))?;
            worst = worst.max(gradient_relative_error(&g, &fd));
        }
    }
    ensure(worst < 1e-4, format!("max relative error {worst:.2e}"))
}

fn consistency() -> std::result::Result<String, String> {
    let ch = gaussian_channels(4, 3, 16, 6, 21, true);
    let pb = PhaseBook::random(3, 16, 22);
    let eq = e2s(equivalent_channel(&ch, &pb))?;
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let s: CVec = gaussian_matrix(4, 1, 100 + i).column(0).into_owned();
        let j = Complex64::new(0.3, -0.1 * i as f64);
        let y = e2s(forward(&ch, &pb, &s, Some(j)))?;
        let want = &eq.full * &s + eq.jammer.as_ref().unwrap() * j;
        worst = worst.max((&y - &want).norm() / want.norm());
    }
    ensure(worst < 1e-12, format!("max relative mismatch {worst:.2e}"))
}

fn linearity() -> std::result::Result<String, String> {
    let ch = gaussian_channels(4, 2, 12, 4, 31, false);
    let pb = PhaseBook::random(2, 12, 32);
    let s1: CVec = gaussian_matrix(4, 1, 33).column(0).into_owned();
    let s2: CVec = gaussian_matrix(4, 1, 34).column(0).into_owned();
    let y = e2s(forward(&ch, &pb, &(&s1 + &s2), None))?;
    let y12 = e2s(forward(&ch, &pb, &s1, None))? + e2s(forward(&ch, &pb, &s2, None))?;
    let err = (&y - &y12).norm() / y.norm();
    ensure(err < 1e-12, format!("superposition error {err:.2e}"))
}

fn periodicity() -> std::result::Result<String, String> {
    let ch = gaussian_channels(3, 2, 9, 4, 41, false);
    let pb = PhaseBook::random(2, 9, 42);
    let mut shifted = pb.clone();
    shifted.set(1, 4, pb.get(1, 4) + 2.0 * PI);
    let a = e2s(equivalent_channel(&ch, &pb))?.full;
    let b = e2s(equivalent_channel(&ch, &shifted))?.full;
    let err = (&a - &b).norm() / a.norm();
    ensure(err < 1e-14, format!("relative change {err:.2e}"))
}

fn loss_properties() -> std::result::Result<String, String> {
    for i in 0..200u64 {
        let r: CVec = gaussian_matrix(4, 1, 500 + i).column(0).into_owned();
        let s: CVec = gaussian_matrix(4, 1, 900 + i).column(0).into_owned();
        let base = e2s(loss(&r, &s))?;
        if !(0.0..=4.0).contains(&base) {
            return Err(format!("loss {base} outside [0, 4]"));
        }
        let c = 0.1 + i as f64;
        let scaled = e2s(loss(&(&r * Complex64::from(c)), &(&s * Complex64::from(1.0 / c))))?;
        if (scaled - base).abs() > 1e-12 {
            return Err(format!("scaling changed the loss by {:.2e}", (scaled - base).abs()));
        }
    }
    Ok("range and positive-scale invariance on 200 pairs".into())
}

fn quantizer() -> std::result::Result<String, String> {
    let pb = PhaseBook::random(3, 50, 61);
    for bits in 1..=8 {
        let q = e2s(quantize_phases(&pb, bits))?;
        if e2s(quantize_phases(&q, bits))? != q {
            return Err(format!("{bits}-bit quantizer is not idempotent"));
        }
        let bound = PI / f64::from(1u32 << bits) + 1e-12;
        let worst = pb
            .values()
            .iter()
            .zip(q.values())
            .map(|(a, b)| circular_distance(*a, *b))
            .fold(0.0, f64::max);
        if worst > bound {
            return Err(format!("{bits}-bit error {worst} above {bound}"));
        }
    }
    Ok("idempotent, error <= pi / 2^B for B = 1..8".into())
}

fn coupling() -> std::result::Result<String, String> {
    let c = coupling_matrix(20, 0.05);
    for i in 0..20usize {
        for j in 0..20usize {
            let d = i.abs_diff(j);
            let want = if d <= COUPLING_BAND { 0.05f64.powi(d as i32) } else { 0.0 };
            if c[(i, j)] != c[(j, i)] || (c[(i, j)] - want).abs() > 1e-18 {
                return Err(format!("entry ({i}, {j}) = {}", c[(i, j)]));
            }
        }
    }
    Ok("symmetric Toeplitz, unit diagonal, band 5".into())
}

/// Exhaustive argmax of the summed magnitudes over injective user-to-antenna maps.
fn brute_force_assignment(mag: &[Vec<f64>]) -> Vec<usize> {
    let (m, k) = (mag.len(), mag[0].len());
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut current = Vec::with_capacity(k);
    fn go(mag: &[Vec<f64>], m: usize, k: usize, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if cur.len() == k {
            let v: f64 = cur.iter().enumerate().map(|(u, &a)| mag[a][u]).sum();
            if v > best.0 {
                *best = (v, cur.clone());
            }
            return;
        }
        for a in 0..m {
            if !cur.contains(&a) {
                cur.push(a);
                go(mag, m, k, cur, best);
                cur.pop();
            }
        }
    }
    go(mag, m, k, &mut current, &mut best);
    best.1
}

fn assignment() -> std::result::Result<String, String> {
    let mut cases = 0;
    for k in 1..=6usize {
        for trial in 0..4u64 {
            let m = k + (trial as usize % 3);
            let full: CMat = gaussian_matrix(m, k, derive_seed(3, "assign", 10 * k as u64 + trial));
            let eq = EquivalentChannel { full: full.clone(), jammer: None };
            let got = e2s(assign_antennas(&eq))?.antenna_of_user;
            let mag: Vec<Vec<f64>> = (0..m).map(|i| (0..k).map(|j| full[(i, j)].norm()).collect()).collect();
            let want = brute_force_assignment(&mag);
            if got != want {
                return Err(format!("K={k} M={m}: got {got:?}, exhaustive {want:?}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} instances with K <= 6 match exhaustive search"))
}

fn channel_purity() -> std::result::Result<String, String> {
    let geom = e2s(build_geometry(&GeometryParams::square(3, 4, 6)))?;
    let layout = e2s(crate::UserLayout::random(3, &Default::default(), Default::default(), 5))?;
    let a = e2s(synthesize_channels(&geom, &layout, None, 9))?;
    let b = e2s(synthesize_channels(&geom, &layout, None, 9))?;
    let c = e2s(synthesize_channels(&geom, &layout, None, 10))?;
    ensure(a == b && a.h != c.h && a.g == c.g, "same seed identical, new seed redraws fading only".into())
}

fn qpsk() -> std::result::Result<String, String> {
    for b in 0..4u8 {
        if qpsk_demodulate(qpsk_modulate(b)) != b {
            return Err(format!("bits {b:02b} do not round-trip"));
        }
    }
    let f = gen_frame(4, 1000, 77);
    let wrong = f.symbols.iter().zip(f.bits.iter()).filter(|(s, &b)| qpsk_demodulate(**s) != b).count();
    ensure(wrong == 0, "Gray mapping round-trips".into())
}

fn noise_statistics() -> std::result::Result<String, String> {
    let n = e2s(awgn(1, 400_000, 2.0, 81))?;
    let var = n.iter().map(|c| c.norm_sqr()).sum::<f64>() / n.len() as f64;
    let w = e2s(jammer_waveform(400_000, &JammerPower { p_min: 1.0, p_max: 1.0 }, 82))?;
    let jvar = w.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / w.samples.len() as f64;
    ensure(
        (var / 2.0 - 1.0).abs() < 0.01 && (jvar / 0.5 - 1.0).abs() < 0.01,
        format!("noise variance {var:.4} (2), jammer variance {jvar:.4} (0.5)"),
    )
}

fn phase_noise_statistics() -> std::result::Result<String, String> {
    let pb = PhaseBook::zeros(1, 200_000);
    let noisy = e2s(von_mises_phase_noise(&pb, 0.1, 83))?;
    let (s, c) = noisy
        .values()
        .iter()
        .fold((0.0, 0.0), |(s, c), &p| (s + p.sin(), c + p.cos()));
    let n = pb.atoms() as f64;
    let r = (s * s + c * c).sqrt() / n;
    let std = (-2.0 * r.ln()).sqrt();
    ensure((std / 0.1 - 1.0).abs() < 0.02, format!("circular std {std:.4} (0.1)"))
}

fn experiment_determinism() -> std::result::Result<String, String> {
    let s = Scenario {
        geometry: GeometryParams::square(2, 3, 4),
        users: UsersSpec {
            count: 2,
            ..UsersSpec::default()
        },
        training: TrainConfig {
            max_episodes: 10,
            pilots: 8,
            ..TrainConfig::default()
        },
        snr_db: vec![5.0],
        realizations: 2,
        payload_slots: 32,
        constellation_slots: 4,
        seed: 99,
        ..Scenario::default()
    };
    let a = e2s(run_experiment(&s))?;
    let b = e2s(run_experiment(&s))?;
    ensure(a == b, "two runs of the same scenario are identical".into())
}

/// Runs every check; the order is fixed.
pub fn run_suite() -> Vec<Check> {
    vec![
        check("gradient_vs_finite_difference", gradient),
        check("forward_vs_equivalent_channel", consistency),
        check("forward_linearity", linearity),
        check("phase_periodicity", periodicity),
        check("loss_range_and_invariance", loss_properties),
        check("quantizer_idempotence_and_bound", quantizer),
        check("coupling_matrix_structure", coupling),
        check("assignment_vs_exhaustive_search", assignment),
        check("channel_purity", channel_purity),
        check("qpsk_round_trip", qpsk),
        check("noise_and_jammer_variance", noise_statistics),
        check("phase_noise_circular_std", phase_noise_statistics),
        check("experiment_determinism", experiment_determinism),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_suite() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(gradient_relative_error(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((gradient_relative_error(&[1.1, 0.0], &[1.0, 0.0]) - 0.1).abs() < 1e-12);
        assert!((gradient_relative_error(&[1.0, 1e-6], &[1.0, 0.0]) - 1e-3).abs() < 1e-12);
    }
}
