//! Transmission spectrum of the two Zeeman-shifted EIT resonances.

use eitmag::eit_optics::{resonance_detunings, transmission, EitLineParams};

fn main() {
    let p = EitLineParams::default();
    let b = 43.58e-3;
    let pair = resonance_detunings(b, &p);
    println!(
        "B = {b} G: resonances at hfs {:+.1} Hz and hfs {:+.1} Hz",
        pair.minus - p.hfs_frequency,
        pair.plus - p.hfs_frequency
    );
    for k in -10..=10 {
        let d = pair.plus + k as f64 * 500.0;
        let t = transmission(d, b, &p);
        let bar = "#".repeat(((t - p.baseline) / p.contrast * 50.0).round() as usize);
        println!("{:>+8.0} Hz {t:.4} {bar}", d - pair.plus);
    }
}
