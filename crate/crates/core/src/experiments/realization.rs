use serde::Serialize;

use super::{JammingMode, Scenario};
use crate::assign::assign_antennas;
use crate::channel::{synthesize_channels, ChannelSet, JammerLayout, UserLayout};
use crate::diagonality::{diagonality_metrics, DiagonalityMetrics};
use crate::error::Result;
use crate::geometry::build_geometry;
use crate::impairments::{apply_coupling, coupling_matrix, quantize_phases, von_mises_phase_noise};
use crate::metrics::{constellation_mse, normalize_slots, ser, sinr_and_sumrate, snr_to_noise_variance};
use crate::model::{cumulative_layer_channels, equivalent_channel, AntennaAssignment, SelectedChannel};
use crate::phases::PhaseBook;
use crate::rng::{derive_seed, seeded_rng};
use crate::signals::{awgn, gen_frame, jammer_waveform, JammerPower, SymbolFrame};
use crate::training::{train, PilotBatch, TrainRecord};
use crate::CMat;

/// Every random stream used by one realization, each derived from the
/// master seed, a purpose label and the realization index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RealizationSeeds {
    pub layout: u64,
    pub jammer_position: u64,
    pub channels: u64,
    pub phases: u64,
    pub pilots: u64,
    pub jam_train: u64,
    pub train_noise: u64,
    pub phase_noise: u64,
    pub constellation: u64,
    pub payload: u64,
}

impl RealizationSeeds {
    pub fn new(master: u64, index: u64) -> Self {
        let d = |purpose: &str| derive_seed(master, purpose, index);
        Self {
            layout: d("layout"),
            jammer_position: d("jammer-position"),
            channels: d("channels"),
            phases: d("phases"),
            pilots: d("pilots"),
            jam_train: d("jam-train"),
            train_noise: d("train-noise"),
            phase_noise: d("phase-noise"),
            constellation: d("constellation"),
            payload: d("payload"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkPoint {
    pub snr_db: f64,
    pub noise_variance: f64,
    pub ser: f64,
    pub sum_rate: f64,
    /// Per-slot-normalized MSE of the noisy received payload.
    pub mse: f64,
    pub sinr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationResult {
    pub index: u64,
    pub seeds: RealizationSeeds,
    pub assignment: Vec<usize>,
    pub train: TrainRecord,
    #[serde(skip)]
    pub phases: PhaseBook,
    /// Noise-free received payload, per-slot normalized, and its reference symbols.
    #[serde(skip)]
    pub constellation: (CMat, CMat),
    pub constellation_mse: f64,
    /// `None` when fewer than two users make the metrics undefined.
    pub diagonality: Vec<Option<DiagonalityMetrics>>,
    pub points: Vec<LinkPoint>,
}

/// The fixed channels and initial state of realization `index`.
pub struct Realization {
    pub seeds: RealizationSeeds,
    pub channels: ChannelSet,
    pub layout: UserLayout,
    pub initial: PhaseBook,
    pub assignment: AntennaAssignment,
}

pub fn draw_realization(scenario: &Scenario, index: u64) -> Result<Realization> {
    let seeds = RealizationSeeds::new(scenario.seed, index);
    let geom = build_geometry(&scenario.geometry)?;
    let layout = UserLayout::random(scenario.users.count, &scenario.users.region, scenario.users.link, seeds.layout)?;
    let jammer = (scenario.jamming.mode != JammingMode::None).then(|| JammerLayout {
        position: scenario.jamming.region.sample(&mut seeded_rng(seeds.jammer_position)),
        link: scenario.jamming.link,
    });
    let channels = synthesize_channels(&geom, &layout, jammer.as_ref(), seeds.channels)?;
    let initial = PhaseBook::random(geom.layers, geom.atoms(), seeds.phases);
    let assignment = assign_antennas(&equivalent_channel(&channels, &initial)?)?;
    Ok(Realization {
        seeds,
        channels,
        layout,
        initial,
        assignment,
    })
}

/// Hardware-impaired selected channel for the trained phases.
pub(crate) fn impaired_channel(
    scenario: &Scenario,
    ch: &ChannelSet,
    pb: &PhaseBook,
    assignment: &AntennaAssignment,
    seeds: &RealizationSeeds,
) -> Result<SelectedChannel> {
    let imp = &scenario.impairments;
    let mut phases = pb.clone();
    if let Some(b) = imp.quant_bits {
        phases = quantize_phases(&phases, b)?;
    }
    if let Some(sigma) = imp.phase_noise {
        phases = von_mises_phase_noise(&phases, sigma, seeds.phase_noise)?;
    }
    let eq = match imp.coupling {
        Some(alpha) => apply_coupling(ch, &coupling_matrix(ch.atoms(), alpha))?.equivalent_channel(&phases)?,
        None => equivalent_channel(ch, &phases)?,
    };
    Ok(eq.select(assignment))
}

/// `D s + j w` for a frame and optional jamming samples.
fn receive(sel: &SelectedChannel, frame: &SymbolFrame, jam: Option<&crate::CVec>) -> CMat {
    let mut r = &sel.matrix * &frame.symbols;
    if let (Some(j), Some(w)) = (&sel.jammer, jam) {
        r += j * w.transpose();
    }
    r
}

/// Jammer power with the nominal level referenced to the mean per-user
/// receive power at the first layer, `mean_k ||h_k||^2 / ||h_J||^2`.
fn jammer_power(scenario: &Scenario, ch: &ChannelSet) -> Option<JammerPower> {
    let hj = ch.jammer.as_ref().filter(|_| scenario.jamming.mode != JammingMode::None)?;
    let users = (0..ch.users()).map(|k| ch.h.column(k).norm_squared()).sum::<f64>() / ch.users() as f64;
    let scale = users / hj.norm_squared();
    let p = scenario.jamming.power();
    Some(JammerPower {
        p_min: p.p_min * scale,
        p_max: p.p_max * scale,
    })
}

/// Draws, trains and evaluates realization `index` of `scenario`.
pub fn run_realization(scenario: &Scenario, index: u64) -> Result<RealizationResult> {
    let Realization {
        seeds,
        channels: ch,
        initial,
        assignment,
        ..
    } = draw_realization(scenario, index)?;
    let k = scenario.users.count;
    let u = scenario.training.pilots;
    let power = jammer_power(scenario, &ch);

    let pilots = gen_frame(k, u, seeds.pilots);
    let jam_train = match (scenario.jamming.mode, &power) {
        (JammingMode::Aware, Some(p)) => Some(jammer_waveform(u, p, seeds.jam_train)?.samples),
        _ => None,
    };
    let train_noise = match scenario.training_snr_db {
        Some(snr) => {
            let sel0 = equivalent_channel(&ch, &initial)?.select(&assignment);
            Some(awgn(k, u, snr_to_noise_variance(snr, &sel0, 1.0)?, seeds.train_noise)?)
        }
        None => None,
    };
    let batch = PilotBatch::clean(&pilots.symbols)
        .with_jammer(jam_train.as_ref())
        .with_noise(train_noise.as_ref());
    let (pb, record) = train(&ch, &batch, &scenario.training, &initial, &assignment)?;

    let ideal = equivalent_channel(&ch, &pb)?.select(&assignment);
    let eval = if scenario.impairments.is_ideal() {
        ideal.clone()
    } else {
        impaired_channel(scenario, &ch, &pb, &assignment, &seeds)?
    };
    let jam_mean = power.map_or(0.0, |p| p.mean_power());
    let jam_samples = |slots: usize, seed: u64| -> Result<Option<crate::CVec>> {
        power
            .as_ref()
            .map(|p| jammer_waveform(slots, p, seed).map(|w| w.samples))
            .transpose()
    };

    let c_slots = scenario.constellation_slots;
    let (constellation, noise_free_mse) = if c_slots > 0 {
        let frame = gen_frame(k, c_slots, derive_seed(seeds.constellation, "frame", 0));
        let w = jam_samples(c_slots, derive_seed(seeds.constellation, "jam", 0))?;
        let r = normalize_slots(&receive(&eval, &frame, w.as_ref()));
        let mse = constellation_mse(&r, &frame.symbols)?;
        ((r, frame.symbols), mse)
    } else {
        ((CMat::zeros(k, 0), CMat::zeros(k, 0)), f64::NAN)
    };

    let diagonality = cumulative_layer_channels(&ch, &pb)?
        .iter()
        .map(|c| diagonality_metrics(&assignment.pick_rows(c)).ok())
        .collect();

    let s = scenario.payload_slots;
    let mut points = Vec::with_capacity(scenario.snr_db.len());
    for (j, &snr) in scenario.snr_db.iter().enumerate() {
        let j = j as u64;
        let sigma2 = snr_to_noise_variance(snr, &ideal, 1.0)?;
        let frame = gen_frame(k, s, derive_seed(seeds.payload, "frame", j));
        let noise = awgn(k, s, sigma2, derive_seed(seeds.payload, "noise", j))?;
        let w = jam_samples(s, derive_seed(seeds.payload, "jam", j))?;
        let r = receive(&eval, &frame, w.as_ref()) + noise;
        let (sinr, sum_rate) = sinr_and_sumrate(&eval, sigma2, jam_mean)?;
        points.push(LinkPoint {
            snr_db: snr,
            noise_variance: sigma2,
            ser: ser(&r, &frame.bits)?,
            sum_rate,
            mse: constellation_mse(&normalize_slots(&r), &frame.symbols)?,
            sinr,
        });
    }

    Ok(RealizationResult {
        index,
        seeds,
        assignment: assignment.antenna_of_user.clone(),
        train: record,
        phases: pb,
        constellation,
        constellation_mse: noise_free_mse,
        diagonality,
        points,
    })
}
