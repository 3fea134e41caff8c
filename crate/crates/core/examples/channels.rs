//! Draws the fixed channels of one realization and prints their scale.

use learnable_sim::channel::{synthesize_channels, ChannelDump, JammerLayout};
use learnable_sim::{build_geometry, GeometryParams, LinkParams, Position, UserLayout};

fn main() -> learnable_sim::Result<()> {
    let geom = build_geometry(&GeometryParams::square(5, 8, 8))?;
    let link = LinkParams::default();
    let users = UserLayout::random(4, &Default::default(), link, 1)?;
    let jammer = JammerLayout {
        position: Position { azimuth: 0.4, elevation: 0.1, distance: 35.0 },
        link,
    };
    let ch = synthesize_channels(&geom, &users, Some(&jammer), 1)?;

    println!("layers {} atoms {} antennas {} users {}", ch.layers(), ch.atoms(), ch.antennas(), ch.users());
    for (k, pos) in users.users.iter().enumerate() {
        println!(
            "user {k}: az {:6.1} deg  el {:6.1} deg  d {:5.1} m  |h|^2 {:.3e}",
            pos.azimuth.to_degrees(),
            pos.elevation.to_degrees(),
            pos.distance,
            ch.h.column(k).norm_squared()
        );
    }
    for (i, w) in ch.inter_layer.iter().enumerate() {
        println!("W{}: Frobenius norm {:.4}", i + 2, w.norm());
    }
    println!("G: Frobenius norm {:.4e}", ch.g.norm());

    let text = ChannelDump { wavelength: geom.wavelength, seed: 1, channels: ch }.to_text();
    println!("text dump: {} lines", text.lines().count());
    Ok(())
}
