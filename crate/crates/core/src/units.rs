//! Physical constants and unit conversions.
//!
//! Field values are carried in tesla internally. Gauss and milligauss only
//! appear at I/O boundaries and in the EIT resonance condition, whose
//! gyromagnetic ratio is conventionally quoted per gauss.

use std::f64::consts::PI;

/// Vacuum permeability, T·m/A.
pub const MU0: f64 = 4.0 * PI * 1e-7;

pub const GAUSS_PER_TESLA: f64 = 1e4;
pub const MILLIGAUSS_PER_GAUSS: f64 = 1e3;

#[inline]
pub fn tesla_to_gauss(b: f64) -> f64 {
    b * GAUSS_PER_TESLA
}

#[inline]
pub fn gauss_to_tesla(b: f64) -> f64 {
    b / GAUSS_PER_TESLA
}

#[inline]
pub fn gauss_to_milligauss(b: f64) -> f64 {
    b * MILLIGAUSS_PER_GAUSS
}

#[inline]
pub fn tesla_to_milligauss(b: f64) -> f64 {
    gauss_to_milligauss(tesla_to_gauss(b))
}
