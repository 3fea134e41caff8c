//! Loads a TOML run configuration with command-line style overrides and
//! prints the resolved scenario and its hash.
//!
//! `cargo run --example config -- examples/configs/default.toml training.eta0=0.95`

use learnable_sim::config::load_config;

fn main() -> learnable_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "examples/configs/default.toml".into());
    let overrides: Vec<String> = args.collect();
    let cfg = load_config(std::path::Path::new(&path), &overrides)?;
    println!("config hash {}", cfg.hash());
    let s = cfg.scenario();
    println!(
        "L {}  atoms {}x{}  antennas {}  users {}",
        s.geometry.layers, s.geometry.atoms_x, s.geometry.atoms_y, s.geometry.bs_antennas, s.users.count
    );
    println!(
        "eta0 {}  beta {}  episodes {}  pilots {}",
        s.training.eta0, s.training.beta, s.training.max_episodes, s.training.pilots
    );
    println!("SNR grid {:?} dB over {} realizations", s.snr_db, s.realizations);
    print!("\n{}", cfg.to_toml()?);
    Ok(())
}
