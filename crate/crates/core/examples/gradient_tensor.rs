//! Finite-difference gradient tensor of the wire field and its Maxwell
//! residuals at a few stencil steps.

use eitmag::field_model::{gradient_tensor, maxwell_residuals, wire_field_vector, WireConfig};
use nalgebra::Vector3;

fn main() -> eitmag::Result<()> {
    let wire = WireConfig::default();
    let point = Vector3::new(wire.rho0, 1.5e-3, 0.0);
    for h in [4e-6, 2e-6, 1e-6] {
        let t = gradient_tensor(|p| wire_field_vector(p, &wire), point, h)?;
        let r = maxwell_residuals(&t);
        println!(
            "h = {:.0} um: dBy/dx = {:.6} mG/mm, residual/max entry = {:.2e}",
            h * 1e6,
            t.entry(1, 0) * 1e4,
            r.max_abs() / t.max_abs_entry()
        );
    }
    let t = gradient_tensor(|p| wire_field_vector(p, &wire), point, 1e-6)?;
    println!("tensor [mG/mm]:\n{:.5}", t.matrix() * 1e4);
    Ok(())
}
