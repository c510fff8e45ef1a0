//! Noiseless simulate-and-reconstruct round trip with CSV and PGM output.
//!
//! Usage: `cargo run --example reconstruct_field_map [OUT_DIR]`

use std::path::PathBuf;

use eitmag::cli::Settings;
use eitmag::recon::reconstruct_map;
use eitmag::stack_sim::simulate_stack;
use eitmag::stackio::{export_map_preview, write_atomic, write_field_csv_file};
use nalgebra::Vector2;

fn main() -> eitmag::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let mut settings = Settings::default();
    settings.set("noise.sigma_frame", "0")?;
    let cfg = settings.resolve()?;

    let stack = simulate_stack(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera)?;
    let rec = reconstruct_map(&stack, &cfg.scene.line, &cfg.recon)?;
    let d = rec.diagnostics;
    let (lo, hi) = (d.min_field.unwrap_or(0.0), d.max_field.unwrap_or(1.0));
    println!(
        "{} of {} pixels valid, B from {:.4} to {:.4} mG",
        d.valid,
        d.pixels,
        lo * 1e3,
        hi * 1e3
    );

    let mut worst: f64 = 0.0;
    for iy in 0..rec.map.height {
        for ix in 0..rec.map.width {
            if let Some(b) = rec.map.get(ix, iy) {
                let (x, y) = rec.map.pixel_center(ix, iy);
                worst = worst.max((b - cfg.scene.field_gauss_at(Vector2::new(x, y))?).abs());
            }
        }
    }
    println!("max error against the analytic field: {:.5} mG", worst * 1e3);

    let csv = dir.join("eitmag_map.csv");
    let pgm = dir.join("eitmag_map.pgm");
    write_field_csv_file(&rec.map, &csv)?;
    write_atomic(&pgm, |w| export_map_preview(&rec.map, lo, hi, w))?;
    println!("wrote {} and {}", csv.display(), pgm.display());
    Ok(())
}
