//! Final training loss as the layer width grows, with common random numbers
//! across sweep points.

use learnable_sim::experiments::{run_sweep, Scenario, SweepAxis, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let base = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        snr_db: vec![10.0],
        realizations: 4,
        payload_slots: 512,
        ..Scenario::default()
    };
    let points = run_sweep(&base, SweepAxis::Atoms, &[16.0, 25.0, 36.0, 49.0, 64.0])?;
    println!("{:>6} {:>12} {:>12}", "atoms", "final loss", "const. mse");
    for p in &points {
        println!(
            "{:>6} {:>12.3e} {:>12.3e}",
            p.value, p.report.final_loss.mean[0], p.report.constellation_mse.mean[0]
        );
    }
    Ok(())
}
