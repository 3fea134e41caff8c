//! Hardware impairments applied to trained phases at evaluation time:
//! phase quantization, inter-atom coupling and static phase noise.

use learnable_sim::experiments::{run_sweep, Scenario, SweepAxis, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let base = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        snr_db: vec![16.0],
        realizations: 4,
        payload_slots: 2048,
        ..Scenario::default()
    };
    for (axis, values) in [
        (SweepAxis::Bits, vec![1.0, 2.0, 3.0, 4.0]),
        (SweepAxis::PhaseNoise, vec![0.0, 0.05, 0.1, 0.2]),
        (SweepAxis::Coupling, vec![0.0, 0.03, 0.05, 0.1]),
    ] {
        println!("{}:", axis.name());
        for p in run_sweep(&base, axis, &values)? {
            let c = &p.report.curves;
            println!("  {:>6}  SER {:.3e}  sum rate {:.2}", p.value, c.ser.mean[0], c.sum_rate.mean[0]);
        }
    }
    Ok(())
}
