//! Simulation and reconstruction toolkit for magnetic field imaging with
//! electromagnetically induced transparency (EIT) in an atomic vapor cell.
//!
//! The crate is organised as a forward chain and an inverse chain:
//!
//! * [`field_model`] computes the transverse field of a current-carrying wire
//!   (bare, linearised, or inside a permeable cylindrical shield) and the
//!   finite-difference gradient tensor with its Maxwell-constraint residuals.
//! * [`eit_optics`] turns a local field into a two-peak Zeeman-split EIT
//!   transmission lineshape and models the Gaussian probe beam.
//! * [`stack_sim`] synthesises the detuning-swept camera image stack with
//!   frame-averaged noise and ADC quantisation, deterministically from a seed.
//! * [`recon`] recovers the field map from a stack: per-pixel low-pass,
//!   peak localisation, detuning-to-field conversion, masking, two-run
//!   uncertainty and the linewidth/S-N sensitivity bound.
//! * [`stackio`] reads and writes the binary stack format, CSV field maps and
//!   16-bit PGM previews.
//! * [`cli`] wires everything into the `eitmag` command line tool.
//!
//! Runnable walk-throughs of each capability live in the crate's `examples/`
//! directory (`cargo run --release -p eitmag --example <name>`).

pub mod cli;
pub mod eit_optics;
pub mod error;
pub mod field_model;
pub mod recon;
pub mod stack_sim;
pub mod stackio;
pub mod units;

pub use error::{Error, Result};
