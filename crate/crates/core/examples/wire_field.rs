//! Field of the straight wire along the y = 0 slice, exact and linearised.

use eitmag::field_model::{linearized_wire_field, wire_field_magnitude, WireConfig};
use eitmag::units::tesla_to_milligauss;

fn main() -> eitmag::Result<()> {
    let wire = WireConfig::new(0.438, 20.1e-3)?;
    let b0 = wire.axis_field();
    println!("B0 = {:.4} mG at rho0 = {} mm", tesla_to_milligauss(b0), wire.rho0 * 1e3);
    println!("slope = {:.4} mG/mm", -tesla_to_milligauss(b0 / wire.rho0) * 1e-3);
    println!("{:>8} {:>12} {:>12} {:>10}", "dx_mm", "exact_mG", "linear_mG", "dev_%");
    for k in -4..=4 {
        let dx = k as f64 * 0.5e-3;
        let exact = wire_field_magnitude(wire.rho0 + dx, &wire)?;
        let lin = linearized_wire_field(dx, &wire);
        println!(
            "{:>8.2} {:>12.5} {:>12.5} {:>10.4}",
            dx * 1e3,
            tesla_to_milligauss(exact),
            tesla_to_milligauss(lin),
            (lin - exact).abs() / exact * 100.0
        );
    }
    Ok(())
}
