//! The `eitmag` command line tool.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 output I/O
//! failure, 4 unreadable or malformed input file.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{Vector2, Vector3};

pub use config::{defaults_text, RunConfig, Settings};

use crate::error::Error;
use crate::field_model::{
    gradient_tensor, maxwell_residuals, shielded_wire_field, wire_field_vector, FieldModel,
};
use crate::recon::{reconstruct_map, theoretical_sensitivity, uncertainty_map};
use crate::stack_sim::{simulate_stack, validate_acquisition};
use crate::stackio;
use crate::units::{gauss_to_milligauss, tesla_to_gauss};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_WRITE: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

/// Relative tolerance for the gradient tensor's Maxwell-constraint check.
pub const GRADTENSOR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "eitmag", version, about = "EIT magnetic field imaging: simulate, reconstruct, compare")]
struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Configuration override, `section.key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Noise seed, overriding `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (simulate) or output prefix (reconstruct, compare).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a detuning-swept image stack.
    Simulate,
    /// Reconstruct a field map from a stack file.
    Reconstruct { stack: PathBuf },
    /// Compare a field map with a second map or with the analytic scene.
    Compare { map_a: PathBuf, map_b: Option<PathBuf> },
    /// Field resolution from linewidth, S/N and samples per linewidth.
    Sensitivity {
        /// Resonance FWHM in kHz (default: line.fwhm_kHz).
        #[arg(long = "gamma-khz")]
        gamma_khz: Option<f64>,
        #[arg(long)]
        snr: f64,
        /// Samples per linewidth.
        #[arg(long)]
        n: f64,
        /// Zeeman coefficient in MHz/G (default: line.g_m_MHz_per_G).
        #[arg(long = "gm-mhz-per-g")]
        gm_mhz_per_g: Option<f64>,
    },
    /// Finite-difference field gradient tensor and Maxwell residuals.
    Gradtensor {
        /// Evaluation point `x,y,z` in mm.
        #[arg(long = "point-mm", value_delimiter = ',', num_args = 1, allow_hyphen_values = true, required = true)]
        point_mm: Vec<f64>,
        /// Stencil half-step in micrometres.
        #[arg(long = "h-um", default_value_t = 1.0)]
        h_um: f64,
        #[arg(long, value_enum, default_value_t = TensorField::Wire)]
        field: TensorField,
    },
    /// Print the documented default configuration.
    PrintDefaults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TensorField {
    /// Bare wire along +z through the origin (wire frame).
    Wire,
    /// Constant field equal to the wire field on the beam axis.
    Uniform,
    /// Wire inside the configured shield (beam frame).
    Shielded,
}

struct Failure {
    code: i32,
    message: String,
}

type CmdResult = std::result::Result<(), Failure>;

fn fail(code: i32, e: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: e.to_string(),
    }
}

/// Maps a library error to an exit code, treating I/O as `io_code`.
fn classify(e: Error, io_code: i32) -> Failure {
    let code = match e {
        Error::Io(_) => io_code,
        Error::Format(_) => EXIT_INPUT,
        Error::Config(_) | Error::Domain(_) | Error::PeakAtEdge { .. } => EXIT_CONFIG,
    };
    fail(code, e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_CONFIG
                }
            };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_CONFIG, format!("reading config {}: {e}", path.display())))?;
        settings.apply_text(&text).map_err(|e| fail(EXIT_CONFIG, e))?;
    }
    for pair in &cli.set {
        settings.set_pair(pair).map_err(|e| fail(EXIT_CONFIG, e))?;
    }
    if let Some(seed) = cli.seed {
        settings
            .set("noise.seed", &seed.to_string())
            .map_err(|e| fail(EXIT_CONFIG, e))?;
    }
    settings.resolve().map_err(|e| fail(EXIT_CONFIG, e))
}

fn out_path(cli: &Cli) -> std::result::Result<&Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| fail(EXIT_CONFIG, "this command needs --out"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    stackio::write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        Ok(text.len() as u64)
    })
    .map(|_| ())
    .map_err(|e| classify(e, EXIT_WRITE))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::PrintDefaults => {
            stdout
                .write_all(defaults_text().as_bytes())
                .map_err(|e| fail(EXIT_WRITE, e))?;
            Ok(())
        }
        Command::Simulate => cmd_simulate(cli, stderr),
        Command::Reconstruct { stack } => cmd_reconstruct(cli, stack, stderr),
        Command::Compare { map_a, map_b } => cmd_compare(cli, map_a, map_b.as_deref(), stderr),
        Command::Sensitivity {
            gamma_khz,
            snr,
            n,
            gm_mhz_per_g,
        } => cmd_sensitivity(cli, *gamma_khz, *snr, *n, *gm_mhz_per_g, stdout),
        Command::Gradtensor { point_mm, h_um, field } => cmd_gradtensor(cli, point_mm, *h_um, *field, stdout),
    }
}

fn cmd_simulate(cli: &Cli, stderr: &mut dyn Write) -> CmdResult {
    let cfg = load_config(cli)?;
    let out = out_path(cli)?;
    let warnings = validate_acquisition(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera)
        .map_err(|e| fail(EXIT_CONFIG, e))?;
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let stack =
        simulate_stack(&cfg.scene, &cfg.sweep, &cfg.noise, &cfg.camera).map_err(|e| classify(e, EXIT_WRITE))?;
    let bytes = stackio::write_stack_file(&stack, out).map_err(|e| classify(e, EXIT_WRITE))?;
    let _ = writeln!(
        stderr,
        "simulated {}x{} pixels x {} detunings, seed {}, wrote {} bytes to {}",
        stack.width(),
        stack.height(),
        stack.len(),
        cfg.noise.seed,
        bytes,
        out.display()
    );
    Ok(())
}

fn fmt_mg(b: Option<f64>) -> String {
    b.map_or_else(|| "none".to_string(), |b| format!("{:.6}", gauss_to_milligauss(b)))
}

fn cmd_reconstruct(cli: &Cli, stack_path: &Path, stderr: &mut dyn Write) -> CmdResult {
    let stack = stackio::read_stack_file(stack_path).map_err(|e| classify(e, EXIT_INPUT))?;
    let cfg = load_config(cli)?;
    let prefix = out_path(cli)?;
    let rec = reconstruct_map(&stack, &cfg.scene.line, &cfg.recon).map_err(|e| classify(e, EXIT_INPUT))?;
    let d = rec.diagnostics;

    let mut diag = String::new();
    let _ = writeln!(diag, "pixels = {}", d.pixels);
    let _ = writeln!(diag, "in_beam = {}", d.in_beam);
    let _ = writeln!(diag, "valid = {}", d.valid);
    let _ = writeln!(diag, "masked_out = {}", d.pixels - d.valid);
    let _ = writeln!(diag, "peak_at_edge = {}", d.peak_at_edge);
    let _ = writeln!(diag, "peak_failure_fraction = {:.6}", d.failure_fraction());
    let _ = writeln!(diag, "min_B_mG = {}", fmt_mg(d.min_field));
    let _ = writeln!(diag, "max_B_mG = {}", fmt_mg(d.max_field));

    stackio::write_field_csv_file(&rec.map, &with_suffix(prefix, ".csv")).map_err(|e| classify(e, EXIT_WRITE))?;
    let (lo, hi) = match (d.min_field, d.max_field) {
        (Some(lo), Some(hi)) if hi > lo => (lo, hi),
        (Some(v), Some(_)) => (v - 1e-9, v + 1e-9),
        _ => (0.0, 1.0),
    };
    stackio::write_atomic(&with_suffix(prefix, ".pgm"), |w| stackio::export_map_preview(&rec.map, lo, hi, w))
        .map_err(|e| classify(e, EXIT_WRITE))?;
    write_text(&with_suffix(prefix, ".diag.txt"), &diag)?;
    let _ = write!(stderr, "{diag}");
    Ok(())
}

fn cmd_compare(cli: &Cli, a_path: &Path, b_path: Option<&Path>, stderr: &mut dyn Write) -> CmdResult {
    let a = stackio::read_field_csv_file(a_path).map_err(|e| classify(e, EXIT_INPUT))?;
    let b = b_path
        .map(|p| stackio::read_field_csv_file(p).map_err(|e| classify(e, EXIT_INPUT)))
        .transpose()?;
    let cfg = load_config(cli)?;
    let prefix = out_path(cli)?;
    if let Some(b) = &b {
        if !a.same_shape(b) {
            return Err(fail(
                EXIT_CONFIG,
                format!("map shapes differ: {}x{} vs {}x{}", a.width, a.height, b.width, b.height),
            ));
        }
    }

    let scene = cfg.scene;
    let analytic = |ix: usize, iy: usize| -> Option<f64> {
        let (x, y) = a.pixel_center(ix, iy);
        scene.field_gauss_at(Vector2::new(x, y)).ok()
    };
    let reference = |ix: usize, iy: usize| -> Option<f64> {
        match &b {
            Some(b) => b.get(ix, iy),
            None => analytic(ix, iy),
        }
    };

    let mut count = 0usize;
    let mut max_abs = 0.0_f64;
    let mut sum_sq = 0.0;
    for iy in 0..a.height {
        for ix in 0..a.width {
            if let (Some(m), Some(r)) = (a.get(ix, iy), reference(ix, iy)) {
                let d = m - r;
                count += 1;
                max_abs = max_abs.max(d.abs());
                sum_sq += d * d;
            }
        }
    }
    if count == 0 {
        return Err(fail(EXIT_CONFIG, "no pixels valid in both inputs"));
    }
    let rms = (sum_sq / count as f64).sqrt();

    let mut report = String::new();
    let _ = writeln!(
        report,
        "reference = {}",
        if b.is_some() { "second map" } else { "analytic scene" }
    );
    let _ = writeln!(report, "pixels_compared = {count}");
    let _ = writeln!(report, "max_abs_diff_mG = {:.6e}", gauss_to_milligauss(max_abs));
    let _ = writeln!(report, "rms_diff_mG = {:.6e}", gauss_to_milligauss(rms));
    if let Some(b) = &b {
        let u = uncertainty_map(&a, b).map_err(|e| classify(e, EXIT_INPUT))?;
        let _ = writeln!(report, "uncertainty_rms_mG = {:.6e}", gauss_to_milligauss(u.rms));
    }

    // y = 0 slice against the bare and shielded wire models
    let shield = cfg.shield;
    let wire = scene.wire;
    let mut slice = String::from("x_m,B_measured_G,B_biot_savart_G,B_shielded_G\n");
    let row = a.center_row();
    for ix in 0..a.width {
        let Some(m) = a.get(ix, row) else { continue };
        let (x, y) = a.pixel_center(ix, row);
        let p = Vector2::new(x, y);
        let bare = FieldModel::Bare
            .transverse_field(&wire, p)
            .map(|v| format!("{:.12e}", tesla_to_gauss(v.norm())))
            .unwrap_or_default();
        let shielded = shielded_wire_field(p, &wire, &shield)
            .map(|v| format!("{:.12e}", tesla_to_gauss(v.norm())))
            .unwrap_or_default();
        let _ = writeln!(slice, "{x:.10e},{m:.12e},{bare},{shielded}");
    }

    write_text(&with_suffix(prefix, ".compare.txt"), &report)?;
    write_text(&with_suffix(prefix, ".slice.csv"), &slice)?;
    let _ = write!(stderr, "{report}");
    Ok(())
}

fn cmd_sensitivity(
    cli: &Cli,
    gamma_khz: Option<f64>,
    snr: f64,
    n: f64,
    gm_mhz_per_g: Option<f64>,
    stdout: &mut dyn Write,
) -> CmdResult {
    let cfg = load_config(cli)?;
    let gamma = gamma_khz.map_or(cfg.scene.line.fwhm, |g| g * 1e3);
    let gm = gm_mhz_per_g.map_or(cfg.scene.line.gyromagnetic, |g| g * 1e6);
    let db = theoretical_sensitivity(gamma, snr, n, gm).map_err(|e| fail(EXIT_CONFIG, e))?;
    writeln!(
        stdout,
        "delta_B = {:.3e} G = {:.3e} mG  (gamma = {gamma} Hz, S/N = {snr}, n = {n}, g_m = {gm} Hz/G)",
        db,
        gauss_to_milligauss(db)
    )
    .map_err(|e| fail(EXIT_WRITE, e))
}

fn cmd_gradtensor(cli: &Cli, point_mm: &[f64], h_um: f64, field: TensorField, stdout: &mut dyn Write) -> CmdResult {
    let cfg = load_config(cli)?;
    if point_mm.len() != 3 {
        return Err(fail(EXIT_CONFIG, "--point-mm needs exactly three values x,y,z"));
    }
    let point = Vector3::new(point_mm[0], point_mm[1], point_mm[2]) * 1e-3;
    let h = h_um * 1e-6;
    let wire = cfg.scene.wire;
    let shield = cfg.shield;
    let b0 = wire.axis_field();
    let tensor = match field {
        TensorField::Wire => gradient_tensor(|p| wire_field_vector(p, &wire), point, h),
        TensorField::Uniform => gradient_tensor(|_| Ok(Vector3::new(0.0, b0, 0.0)), point, h),
        TensorField::Shielded => gradient_tensor(
            |p| shielded_wire_field(Vector2::new(p.x, p.y), &wire, &shield).map(|b| Vector3::new(b.x, b.y, 0.0)),
            point,
            h,
        ),
    }
    .map_err(|e| fail(EXIT_CONFIG, e))?;
    let res = maxwell_residuals(&tensor);
    let scale = tensor.max_abs_entry();
    let relative = if scale > 0.0 { res.max_abs() / scale } else { res.max_abs() };
    let pass = relative <= GRADTENSOR_TOLERANCE;

    // 1 T/m = 1e4 mG/mm
    let mut out = String::new();
    let _ = writeln!(
        out,
        "gradient tensor dB_i/dx_j [mG/mm] at ({}, {}, {}) mm, h = {h_um} um, field = {field:?}",
        point_mm[0], point_mm[1], point_mm[2]
    );
    for i in 0..3 {
        let _ = writeln!(
            out,
            "  [{:>14.6e} {:>14.6e} {:>14.6e}]",
            tensor.entry(i, 0) * 1e4,
            tensor.entry(i, 1) * 1e4,
            tensor.entry(i, 2) * 1e4
        );
    }
    let _ = writeln!(out, "dBy/dx = {:.6e} mG/mm", tensor.entry(1, 0) * 1e4);
    let _ = writeln!(out, "divergence = {:.3e} mG/mm", res.divergence * 1e4);
    let _ = writeln!(
        out,
        "curl = ({:.3e}, {:.3e}, {:.3e}) mG/mm",
        res.curl.x * 1e4,
        res.curl.y * 1e4,
        res.curl.z * 1e4
    );
    let _ = writeln!(
        out,
        "maxwell_check = {} (max residual {relative:.3e} of max entry, tolerance {GRADTENSOR_TOLERANCE:e})",
        if pass { "pass" } else { "fail" }
    );
    stdout.write_all(out.as_bytes()).map_err(|e| fail(EXIT_WRITE, e))
}
