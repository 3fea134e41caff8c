//! Trains the phases of a single realization and prints the loss trace.

use learnable_sim::experiments::{run_realization, Scenario, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let scenario = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        snr_db: vec![10.0],
        realizations: 1,
        payload_slots: 1024,
        ..Scenario::default()
    };
    let r = run_realization(&scenario, 0)?;
    let rec = &r.train;
    println!("assignment (user -> antenna): {:?}", r.assignment);
    println!("episode 0  loss {:.4e}", rec.initial.mean);
    for t in (0..rec.episodes_run).step_by(20).chain([rec.episodes_run - 1]) {
        println!("episode {:<3} loss {:.4e}  eta {:.4}", t + 1, rec.loss_mean[t], rec.eta[t]);
    }
    println!("stopped: {:?}", rec.termination);
    println!("noise-free constellation MSE {:.3e}", r.constellation_mse);
    Ok(())
}
