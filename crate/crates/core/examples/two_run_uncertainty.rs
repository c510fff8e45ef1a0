//! Per-pixel uncertainty from two runs with different seeds, next to the
//! prediction from the measured trace S/N.

use eitmag::cli::Settings;
use eitmag::recon::{median_snr, reconstruct_map, theoretical_sensitivity, uncertainty_map};
use eitmag::stack_sim::simulate_stack;

fn main() -> eitmag::Result<()> {
    for sigma in ["0.1", "0.25", "0.5"] {
        let mut maps = Vec::new();
        let mut snr = 0.0;
        for seed in ["1", "2"] {
            let mut s = Settings::default();
            s.set("noise.sigma_frame", sigma)?;
            s.set("noise.seed", seed)?;
            let cfg = s.resolve()?;
            let stack = simulate_stack(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera)?;
            snr = median_snr(&stack, &cfg.recon)?;
            let n = cfg.scene.line.fwhm / cfg.sweep.step;
            let predicted = theoretical_sensitivity(cfg.scene.line.fwhm, snr, n, cfg.scene.line.gyromagnetic)?;
            if seed == "1" {
                print!("sigma_frame {sigma}: predicted {:.4} mG, ", predicted * 1e3);
            }
            maps.push(reconstruct_map(&stack, &cfg.scene.line, &cfg.recon)?.map);
        }
        let u = uncertainty_map(&maps[0], &maps[1])?;
        println!("two-run rms {:.4} mG (S/N {snr:.2}, {} pixels)", u.rms * 1e3, u.count);
    }
    Ok(())
}
