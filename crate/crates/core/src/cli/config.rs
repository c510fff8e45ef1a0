//! Flat `section.key = value` run configuration.
//!
//! Every physical quantity carries its unit in the key name. Unknown keys
//! are rejected so that typos do not silently fall back to defaults.

use std::collections::BTreeMap;

use crate::eit_optics::{BeamProfile, EitLineParams};
use crate::error::{Error, Result};
use crate::field_model::{FieldModel, ShieldConfig, WireConfig};
use crate::recon::{Branch, ReconConfig, Refine};
use crate::stack_sim::{CameraConfig, NoiseConfig, Scene, SweepConfig};

struct KeySpec {
    key: &'static str,
    default: &'static str,
    help: &'static str,
}

const fn key(key: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, default, help }
}

/// Section headings and keys, in file order.
const LAYOUT: &[(&str, &[KeySpec])] = &[
    (
        "wire (parallel to the optical axis, at (-rho0, 0) in the beam frame)",
        &[
            key("wire.current_mA", "438", "Wire current."),
            key("wire.rho0_mm", "20.1", "Distance from the wire to the beam axis."),
        ],
    ),
    (
        "field model",
        &[key(
            "scene.field_model",
            "bare",
            "bare | linearized | shielded",
        )],
    ),
    (
        "shield (used by the shielded model and by the comparison slice)",
        &[
            key("shield.radius_mm", "30", "Inner radius of the permeable cylinder."),
            key("shield.mu_r", "100000", "Relative permeability."),
            key("shield.offset_x_mm", "0", "Shield axis position relative to the beam axis."),
            key("shield.offset_y_mm", "0", ""),
        ],
    ),
    (
        "EIT line",
        &[
            key("line.hfs_MHz", "6834", "Zero-field two-photon resonance."),
            key("line.g_m_MHz_per_G", "0.7", "Zeeman shift coefficient; peaks sit at hfs +- 2 g_m |B|."),
            key("line.fwhm_kHz", "2", "Resonance full width at half maximum."),
            key("line.contrast", "0.2", "Peak height of each resonance."),
            key("line.baseline", "0.5", "Off-resonance transmission."),
            key("line.light_shift_Hz", "0", "Constant light-shift offset."),
        ],
    ),
    (
        "probe beam",
        &[
            key("beam.fwhm_x_mm", "1.8", "Intensity FWHM."),
            key("beam.fwhm_y_mm", "1.4", ""),
            key("beam.center_x_mm", "0", ""),
            key("beam.center_y_mm", "0", ""),
            key("beam.scale", "1", "Peak intensity in camera full-scale units."),
        ],
    ),
    (
        "detuning sweep",
        &[
            key(
                "sweep.center_offset_kHz",
                "auto",
                "Sweep centre relative to line.hfs_MHz; `auto` centres on the resonance\n# of the selected recon.branch at the beam axis.",
            ),
            key("sweep.span_kHz", "20", ""),
            key("sweep.step_Hz", "200", ""),
        ],
    ),
    (
        "camera",
        &[
            key("camera.pixel_pitch_um", "10", "Pixel pitch referred to the cell."),
            key("camera.width_px", "200", ""),
            key("camera.height_px", "200", ""),
            key("camera.bit_depth", "12", ""),
            key("camera.full_scale", "1", "Transmission mapped to the largest DN."),
            key("camera.frames_averaged", "200", ""),
            key("camera.frame_rate_Hz", "30", "Recorded as metadata only."),
        ],
    ),
    (
        "noise",
        &[
            key("noise.sigma_frame", "0.01", "Per-frame additive noise std, transmission units."),
            key("noise.seed", "1", ""),
        ],
    ),
    (
        "reconstruction",
        &[
            key("recon.lowpass_window", "7", "Odd moving-average length in samples."),
            key("recon.branch", "plus", "plus | minus"),
            key("recon.mask_threshold", "0.5", "Fraction of the brightest pixel's median DN."),
            key("recon.refine", "parabolic", "argmax | parabolic"),
        ],
    ),
];

fn all_keys() -> impl Iterator<Item = &'static KeySpec> {
    LAYOUT.iter().flat_map(|(_, keys)| keys.iter())
}

/// Raw key/value settings: defaults, then a config file, then overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: all_keys().map(|k| (k.key, k.default.to_string())).collect(),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = all_keys()
            .find(|k| k.key == key)
            .ok_or_else(|| Error::config(format!("unknown config key {key:?}")))?;
        self.values.insert(spec.key, value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v)
    }

    /// Applies every assignment in a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line)
                .map_err(|e| Error::config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    fn number(&self, key: &str) -> Result<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::config(format!("{key}: expected a finite number, got {v:?}")))
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse::<T>()
            .map_err(|_| Error::config(format!("{key}: expected a non-negative integer, got {v:?}")))
    }

    /// Builds and validates the typed configuration.
    pub fn resolve(&self) -> Result<RunConfig> {
        let wire = WireConfig {
            current: self.number("wire.current_mA")? / 1e3,
            rho0: self.number("wire.rho0_mm")? / 1e3,
            axis: [0.0, 0.0, 1.0],
        };
        let shield = ShieldConfig {
            radius: self.number("shield.radius_mm")? / 1e3,
            mu_r: self.number("shield.mu_r")?,
            center: [
                self.number("shield.offset_x_mm")? / 1e3,
                self.number("shield.offset_y_mm")? / 1e3,
            ],
        };
        let field_model = match self.raw("scene.field_model") {
            "bare" => FieldModel::Bare,
            "linearized" => FieldModel::Linearized,
            "shielded" => FieldModel::Shielded { shield },
            other => {
                return Err(Error::config(format!(
                    "scene.field_model: expected bare, linearized or shielded, got {other:?}"
                )))
            }
        };
        let line = EitLineParams {
            hfs_frequency: self.number("line.hfs_MHz")? * 1e6,
            gyromagnetic: self.number("line.g_m_MHz_per_G")? * 1e6,
            fwhm: self.number("line.fwhm_kHz")? * 1e3,
            contrast: self.number("line.contrast")?,
            baseline: self.number("line.baseline")?,
            light_shift_offset: self.number("line.light_shift_Hz")?,
        };
        let beam = BeamProfile {
            fwhm_x: self.number("beam.fwhm_x_mm")? / 1e3,
            fwhm_y: self.number("beam.fwhm_y_mm")? / 1e3,
            center: [
                self.number("beam.center_x_mm")? / 1e3,
                self.number("beam.center_y_mm")? / 1e3,
            ],
            scale: self.number("beam.scale")?,
        };
        let scene = Scene {
            wire,
            field_model,
            line,
            beam,
        };
        scene.validate().map_err(|e| Error::config(e.to_string()))?;

        let recon = ReconConfig {
            lowpass_window: self.integer("recon.lowpass_window")?,
            branch: match self.raw("recon.branch") {
                "plus" => Branch::Plus,
                "minus" => Branch::Minus,
                other => return Err(Error::config(format!("recon.branch: expected plus or minus, got {other:?}"))),
            },
            mask_threshold: self.number("recon.mask_threshold")?,
            refine: match self.raw("recon.refine") {
                "argmax" => Refine::Argmax,
                "parabolic" => Refine::Parabolic,
                other => {
                    return Err(Error::config(format!(
                        "recon.refine: expected argmax or parabolic, got {other:?}"
                    )))
                }
            },
        };
        recon.validate().map_err(|e| Error::config(e.to_string()))?;

        let center = match self.raw("sweep.center_offset_kHz") {
            "auto" => {
                let b = scene
                    .field_gauss_at(nalgebra::Vector2::zeros())
                    .map_err(|e| Error::config(e.to_string()))?;
                let pair = crate::eit_optics::resonance_detunings(b, &line);
                match recon.branch {
                    Branch::Plus => pair.plus,
                    Branch::Minus => pair.minus,
                }
            }
            _ => line.hfs_frequency + self.number("sweep.center_offset_kHz")? * 1e3,
        };
        let sweep = SweepConfig {
            center,
            span: self.number("sweep.span_kHz")? * 1e3,
            step: self.number("sweep.step_Hz")?,
        };
        sweep.validate().map_err(|e| Error::config(e.to_string()))?;

        let camera = CameraConfig {
            pixel_pitch: self.number("camera.pixel_pitch_um")? / 1e6,
            width: self.integer("camera.width_px")?,
            height: self.integer("camera.height_px")?,
            bit_depth: self.integer("camera.bit_depth")?,
            full_scale: self.number("camera.full_scale")?,
            frames_averaged: self.integer("camera.frames_averaged")?,
            frame_rate: self.number("camera.frame_rate_Hz")?,
        };
        camera.validate().map_err(|e| Error::config(e.to_string()))?;

        let noise = NoiseConfig {
            sigma_frame: self.number("noise.sigma_frame")?,
            seed: self.integer("noise.seed")?,
        };
        noise.validate().map_err(|e| Error::config(e.to_string()))?;

        Ok(RunConfig {
            scene,
            shield,
            sweep,
            camera,
            noise,
            recon,
        })
    }
}

/// Documented default configuration file.
pub fn defaults_text() -> String {
    let mut out = String::from(
        "# eitmag run configuration\n\
         #\n\
         # Flat `section.key = value` pairs; `#` starts a comment. Physical\n\
         # quantities carry their unit in the key name. Any key can be\n\
         # overridden on the command line with `--set key=value`.\n\
         # Regenerate this file with `eitmag print-defaults`.\n",
    );
    for (section, keys) in LAYOUT {
        out.push_str(&format!("\n# --- {section} ---\n"));
        for k in keys.iter() {
            if !k.help.is_empty() {
                out.push_str(&format!("# {}\n", k.help));
            }
            out.push_str(&format!("{} = {}\n", k.key, k.default));
        }
    }
    out
}

/// Fully typed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scene: Scene,
    /// Shield geometry, also used for comparison slices when the scene is bare.
    pub shield: ShieldConfig,
    pub sweep: SweepConfig,
    pub camera: CameraConfig,
    pub noise: NoiseConfig,
    pub recon: ReconConfig,
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn defaults_resolve_to_library_defaults() {
        let cfg = Settings::default().resolve().unwrap();
        assert_eq!(cfg.scene.field_model, FieldModel::Bare);
        assert_relative_eq!(cfg.scene.wire.rho0, WireConfig::default().rho0, max_relative = 1e-15);
        assert_relative_eq!(cfg.scene.wire.current, WireConfig::default().current, max_relative = 1e-15);
        assert_eq!(cfg.scene.line, EitLineParams::default());
        assert_eq!(cfg.camera, CameraConfig::default());
        assert_eq!(cfg.noise, NoiseConfig::default());
        assert_eq!(cfg.recon, ReconConfig::default());
        assert_eq!(cfg.sweep.len(), 101);
        assert_relative_eq!(cfg.sweep.center - 6.834e9, 61_014.925, max_relative = 1e-6);
    }

    #[test]
    fn defaults_text_round_trips() {
        let mut s = Settings::default();
        s.set("wire.current_mA", "1").unwrap();
        s.apply_text(&defaults_text()).unwrap();
        assert_eq!(s, Settings::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut s = Settings::default();
        assert!(matches!(s.set("wire.curent_mA", "1"), Err(Error::Config(_))));
        assert!(s.apply_text("camera.width = 3\n").is_err());
        assert!(s.set_pair("no-equals").is_err());
    }

    #[test]
    fn invariants_enforced_at_load() {
        let cases = [
            ("sweep.step_Hz", "30000"),
            ("line.contrast", "0.4"),
            ("camera.bit_depth", "17"),
            ("recon.lowpass_window", "4"),
            ("wire.rho0_mm", "0"),
            ("scene.field_model", "fem"),
            ("noise.sigma_frame", "-1"),
            ("camera.width_px", "-3"),
            ("line.fwhm_kHz", "abc"),
        ];
        for (k, v) in cases {
            let mut s = Settings::default();
            s.set(k, v).unwrap();
            assert!(matches!(s.resolve(), Err(Error::Config(_))), "{k}={v}");
        }
    }

    #[test]
    fn explicit_sweep_offset_and_minus_branch() {
        let mut s = Settings::default();
        s.apply_text("sweep.center_offset_kHz = -61  # lower resonance\nrecon.branch = minus\n")
            .unwrap();
        let cfg = s.resolve().unwrap();
        assert_eq!(cfg.sweep.center, 6.834e9 - 61e3);
        s.set("sweep.center_offset_kHz", "auto").unwrap();
        let cfg = s.resolve().unwrap();
        assert_relative_eq!(cfg.sweep.center - 6.834e9, -61_014.925, max_relative = 1e-6);
    }

    #[test]
    fn shielded_model_carries_shield() {
        let mut s = Settings::default();
        s.apply_text("scene.field_model = shielded\nshield.offset_x_mm = 1\n").unwrap();
        let cfg = s.resolve().unwrap();
        match cfg.scene.field_model {
            FieldModel::Shielded { shield } => assert_eq!(shield.center, [1e-3, 0.0]),
            other => panic!("{other:?}"),
        }
        s.set("shield.radius_mm", "10").unwrap();
        assert!(s.resolve().is_err());
    }
}
