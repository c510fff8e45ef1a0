//! Simulates the default detuning-swept stack and writes it to disk.
//!
//! Usage: `cargo run --example simulate_stack [OUT_PATH]`

use std::path::PathBuf;

use eitmag::cli::Settings;
use eitmag::stack_sim::{simulate_stack, validate_acquisition};
use eitmag::stackio::write_stack_file;

fn main() -> eitmag::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("eitmag_default.stk"));
    let cfg = Settings::default().resolve()?;
    for w in validate_acquisition(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera)? {
        eprintln!("warning: {w}");
    }
    let stack = simulate_stack(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera)?;
    let bytes = write_stack_file(&stack, &out)?;
    let centre = stack.trace(stack.width() / 2, stack.height() / 2);
    println!(
        "{}x{}x{} stack, {bytes} bytes -> {}",
        stack.width(),
        stack.height(),
        stack.len(),
        out.display()
    );
    println!("centre pixel DN range {}..{}", centre.iter().min().unwrap(), centre.iter().max().unwrap());
    Ok(())
}
