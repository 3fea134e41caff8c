//! Wall time per training episode as the atom count grows.

use std::time::Instant;

use learnable_sim::synthetic::{gaussian_channels, gaussian_matrix};
use learnable_sim::{train, AntennaAssignment, PhaseBook, PilotBatch, TrainConfig};

fn main() -> learnable_sim::Result<()> {
    let (k, layers, pilots, episodes) = (4, 3, 256, 4);
    let cfg = TrainConfig { max_episodes: episodes, tolerance: 0.0, pilots, ..TrainConfig::default() };
    let pilot_symbols = gaussian_matrix(k, pilots, 2);
    let batch = PilotBatch::clean(&pilot_symbols);
    let assignment = AntennaAssignment::identity(k);
    let mut last: Option<(f64, f64)> = None;
    println!("{:>6} {:>14} {:>8}", "atoms", "s / episode", "slope");
    for n in [16, 32, 64, 128, 256] {
        let ch = gaussian_channels(k, layers, n, k, 1, false);
        let pb = PhaseBook::random(layers, n, 3);
        let start = Instant::now();
        train(&ch, &batch, &cfg, &pb, &assignment)?;
        let per = start.elapsed().as_secs_f64() / episodes as f64;
        let slope = last.map(|(n0, t0)| (per / t0).ln() / (n as f64 / n0).ln());
        println!("{n:>6} {per:>14.3e} {:>8}", slope.map_or(String::from("-"), |s| format!("{s:.2}")));
        last = Some((n as f64, per));
    }
    Ok(())
}
