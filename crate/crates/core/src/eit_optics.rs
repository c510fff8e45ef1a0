//! Phenomenological EIT transmission under Zeeman splitting, and the probe
//! beam's transverse intensity profile.
//!
//! The two magnetically sensitive Λ systems give transparency peaks at
//! two-photon detunings `hfs ± 2 g_m |B|`. Each peak is a unit-height
//! Lorentzian of full width `fwhm`, scaled by `contrast` on top of a flat
//! `baseline`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ⁸⁷Rb ground-state hyperfine splitting, Hz (nominal modulation frequency).
pub const RB87_HFS_HZ: f64 = 6.834e9;
/// Zeeman shift coefficient of the relevant ⁸⁷Rb sublevels, Hz/G.
pub const RB87_GYROMAGNETIC_HZ_PER_G: f64 = 0.7e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitLineParams {
    /// Zero-field resonance, Hz.
    pub hfs_frequency: f64,
    /// Hz per gauss.
    pub gyromagnetic: f64,
    /// Full width at half maximum of each peak, Hz.
    pub fwhm: f64,
    pub contrast: f64,
    pub baseline: f64,
    /// Constant additive light shift, Hz.
    pub light_shift_offset: f64,
}

impl Default for EitLineParams {
    fn default() -> Self {
        EitLineParams {
            hfs_frequency: RB87_HFS_HZ,
            gyromagnetic: RB87_GYROMAGNETIC_HZ_PER_G,
            fwhm: 2e3,
            contrast: 0.2,
            baseline: 0.5,
            light_shift_offset: 0.0,
        }
    }
}

impl EitLineParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.hfs_frequency,
            self.gyromagnetic,
            self.fwhm,
            self.contrast,
            self.baseline,
            self.light_shift_offset,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("EIT line parameters must be finite"));
        }
        if self.fwhm <= 0.0 {
            return Err(Error::domain("EIT linewidth must be > 0"));
        }
        if self.gyromagnetic <= 0.0 {
            return Err(Error::domain("gyromagnetic ratio must be > 0"));
        }
        // Zero contrast is accepted so that resonance-free scenes can be built.
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::domain("EIT contrast must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.baseline) {
            return Err(Error::domain("transmission baseline must lie in [0, 1)"));
        }
        if self.baseline + 2.0 * self.contrast > 1.0 + 1e-12 {
            return Err(Error::domain(
                "baseline + 2 * contrast must not exceed unit transmission",
            ));
        }
        Ok(())
    }
}

/// The Zeeman-split resonance pair, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePair {
    pub minus: f64,
    pub plus: f64,
}

pub fn resonance_detunings(field_gauss: f64, p: &EitLineParams) -> ResonancePair {
    let center = p.hfs_frequency + p.light_shift_offset;
    let shift = 2.0 * p.gyromagnetic * field_gauss.abs();
    ResonancePair {
        minus: center - shift,
        plus: center + shift,
    }
}

/// Unit-peak Lorentzian of full width `fwhm` centred on `center`.
#[inline]
pub fn lorentzian(detuning: f64, center: f64, fwhm: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    let d = detuning - center;
    hw2 / (d * d + hw2)
}

pub fn transmission(detuning: f64, field_gauss: f64, p: &EitLineParams) -> f64 {
    let pair = resonance_detunings(field_gauss, p);
    p.baseline
        + p.contrast
            * (lorentzian(detuning, pair.minus, p.fwhm) + lorentzian(detuning, pair.plus, p.fwhm))
}

/// Elliptical Gaussian probe beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    /// Intensity FWHM along x, meters.
    pub fwhm_x: f64,
    /// Intensity FWHM along y, meters.
    pub fwhm_y: f64,
    /// Beam-frame center, meters.
    pub center: [f64; 2],
    /// Peak transmitted intensity in full-scale units.
    pub scale: f64,
}

impl Default for BeamProfile {
    fn default() -> Self {
        BeamProfile {
            fwhm_x: 1.8e-3,
            fwhm_y: 1.4e-3,
            center: [0.0, 0.0],
            scale: 1.0,
        }
    }
}

impl BeamProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_x > 0.0 && self.fwhm_y > 0.0) {
            return Err(Error::domain("beam FWHM must be > 0 on both axes"));
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::domain("beam scale must be finite and >= 0"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::domain("beam center must be finite"));
        }
        Ok(())
    }
}

pub fn beam_intensity(x: f64, y: f64, b: &BeamProfile) -> f64 {
    let dx = (x - b.center[0]) / b.fwhm_x;
    let dy = (y - b.center[1]) / b.fwhm_y;
    b.scale * (-4.0 * std::f64::consts::LN_2 * (dx * dx + dy * dy)).exp()
}
