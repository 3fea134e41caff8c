//! Payload constellation when user distances drift after training.

use learnable_sim::experiments::{distance_robustness, run_realization, Scenario, UsersSpec};
use learnable_sim::GeometryParams;

fn main() -> learnable_sim::Result<()> {
    let scenario = Scenario {
        geometry: GeometryParams::square(5, 8, 8),
        users: UsersSpec { count: 4, ..UsersSpec::default() },
        snr_db: vec![10.0],
        realizations: 1,
        payload_slots: 256,
        ..Scenario::default()
    };
    let trained = run_realization(&scenario, 0)?;
    for range in [(1.0, 1.0), (0.8, 1.2), (0.5, 1.5)] {
        let dump = distance_robustness(&scenario, 0, &trained.phases, range, 512, 3)?;
        let n = dump.points.len() as f64;
        let (amp, err) = dump.points.iter().fold((0.0, 0.0), |(a, e), p| {
            let r = num_complex::Complex64::new(p.re, p.im);
            let s = num_complex::Complex64::new(p.ideal_re, p.ideal_im);
            (a + r.norm(), e + (r / r.norm() - s).norm_sqr())
        });
        println!(
            "scale {:?}: mean amplitude {:.3}  mean phase-direction error {:.3e}",
            range,
            amp / n,
            err / n
        );
    }
    println!("\nfirst points (slot,user,re,im,ideal_re,ideal_im):");
    let dump = distance_robustness(&scenario, 0, &trained.phases, (0.5, 1.5), 2, 3)?;
    for line in dump.to_csv().lines().skip(1) {
        println!("  {line}");
    }
    Ok(())
}
