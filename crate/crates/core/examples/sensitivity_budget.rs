//! Field resolution per pixel across S/N and samples per linewidth.

use eitmag::eit_optics::RB87_GYROMAGNETIC_HZ_PER_G;
use eitmag::recon::theoretical_sensitivity;

fn main() -> eitmag::Result<()> {
    let gamma = 2e3;
    let ns = [5.0, 10.0, 20.0];
    print!("{:>8}", "S/N");
    for n in ns {
        print!(" {:>14}", format!("n={n} [uG]"));
    }
    println!();
    for snr in [3.0, 10.0, 30.0, 100.0, 300.0] {
        print!("{snr:>8}");
        for n in ns {
            let db = theoretical_sensitivity(gamma, snr, n, RB87_GYROMAGNETIC_HZ_PER_G)?;
            print!(" {:>14.3}", db * 1e6);
        }
        println!();
    }
    Ok(())
}
