//! Jammer-aware training against jammer-agnostic training, evaluated under the
//! same jammer.

use learnable_sim::experiments::{run_jamming, JammingMode, JammingSpec, Scenario, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let base = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        jamming: JammingSpec { jsr_db: 0.0, ..JammingSpec::default() },
        snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        realizations: 4,
        payload_slots: 2048,
        ..Scenario::default()
    };
    let aware = run_jamming(&base.with_jamming(JammingMode::Aware))?;
    let agnostic = run_jamming(&base.with_jamming(JammingMode::Agnostic))?;
    println!("{:>7} {:>12} {:>12}", "snr_db", "ser aware", "ser agnostic");
    for (i, snr) in base.snr_db.iter().enumerate() {
        println!("{snr:>7.1} {:>12.3e} {:>12.3e}", aware.curves.ser.mean[i], agnostic.curves.ser.mean[i]);
    }
    Ok(())
}
