//! Wire inside a permeable cylinder: image-current field versus the bare
//! wire, and how much a 1 mm shield displacement moves the slice.

use eitmag::field_model::{shielded_wire_field, FieldModel, ShieldConfig, WireConfig};
use eitmag::units::tesla_to_milligauss;
use nalgebra::Vector2;

fn main() -> eitmag::Result<()> {
    let wire = WireConfig::default();
    let shield = ShieldConfig::default();
    let moved = ShieldConfig {
        center: [1e-3, 0.0],
        ..shield
    };
    println!("{:>8} {:>10} {:>12} {:>14}", "x_mm", "bare_mG", "shielded_mG", "moved_1mm_mG");
    for k in -4..=4 {
        let p = Vector2::new(k as f64 * 0.25e-3, 0.0);
        let bare = FieldModel::Bare.transverse_field(&wire, p)?.norm();
        let inside = shielded_wire_field(p, &wire, &shield)?.norm();
        let shifted = shielded_wire_field(p, &wire, &moved)?.norm();
        println!(
            "{:>8.2} {:>10.4} {:>12.4} {:>14.4}",
            p.x * 1e3,
            tesla_to_milligauss(bare),
            tesla_to_milligauss(inside),
            tesla_to_milligauss(shifted)
        );
    }
    Ok(())
}
