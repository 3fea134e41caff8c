//! Multi-user separation averaged over realizations: SNR curves and the
//! layer-by-layer diagonality of the equivalent channel.

use learnable_sim::experiments::{run_multiuser, Scenario, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let scenario = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        realizations: 4,
        payload_slots: 2048,
        ..Scenario::default()
    };
    let rep = run_multiuser(&scenario)?;
    let c = &rep.curves;
    println!("{:>7} {:>10} {:>10} {:>10}", "snr_db", "ser", "sum_rate", "mse");
    for (i, snr) in c.snr_db.iter().enumerate() {
        println!("{snr:>7.1} {:>10.3e} {:>10.3} {:>10.3e}", c.ser.mean[i], c.sum_rate.mean[i], c.mse.mean[i]);
    }
    println!("\nlayer  off-diagonal suppression (dB)");
    for (l, d) in rep.diagonality.iter().enumerate() {
        if let Some(d) = d {
            println!("{:>5}  {:.2}", l + 1, d.offdiag_suppression_db);
        }
    }
    println!("\nfinal loss {:.3e} +/- {:.1e}", rep.final_loss.mean[0], rep.final_loss.std[0]);
    Ok(())
}
