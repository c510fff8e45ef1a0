//! Synthesis of the detuning-swept camera image stack.
//!
//! For each pixel and each two-photon detuning the ideal signal is the beam
//! intensity at the pixel center times the EIT transmission at the local
//! field. Frame noise is additive Gaussian; the average of `frames_averaged`
//! frames is drawn directly from its exact distribution, `N(0, sigma/sqrt(N))`.
//! The averaged value is then quantised by the camera ADC.
//!
//! Noise draws come from a counter-based stream keyed by
//! `(seed, ix, iy, detuning index)`, so a stack is a pure function of its
//! inputs no matter how pixels are scheduled across threads.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eit_optics::{beam_intensity, resonance_detunings, transmission, BeamProfile, EitLineParams};
use crate::error::{Error, Result};
use crate::field_model::{FieldModel, WireConfig};
use crate::units::tesla_to_gauss;

/// Human-readable statement of the sign convention, stored with every stack.
pub const GEOMETRY_CONVENTION: &str =
    "beam frame: wire at (-rho0, 0), current along +z, field increases toward -x; \
     pixel (ix, iy) centre at ((ix - width/2) * pitch, (iy - height/2) * pitch)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Pixel pitch referred to the cell plane, meters.
    pub pixel_pitch: f64,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u32,
    /// Transmission value mapped to the largest DN.
    pub full_scale: f64,
    pub frames_averaged: u32,
    /// Metadata only.
    pub frame_rate: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            pixel_pitch: 10e-6,
            width: 200,
            height: 200,
            bit_depth: 12,
            full_scale: 1.0,
            frames_averaged: 200,
            frame_rate: 30.0,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::domain("camera must have at least one pixel"));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(Error::domain("camera bit depth must be within 1..=16"));
        }
        if self.frames_averaged == 0 {
            return Err(Error::domain("frames_averaged must be >= 1"));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::domain("pixel pitch must be > 0"));
        }
        if !(self.full_scale.is_finite() && self.full_scale > 0.0) {
            return Err(Error::domain("full scale must be > 0"));
        }
        Ok(())
    }

    pub fn max_dn(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    /// One ADC step in transmission units.
    pub fn lsb(&self) -> f64 {
        self.full_scale / f64::from(self.max_dn())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Beam-frame coordinates of a pixel centre, meters.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> Vector2<f64> {
        pixel_center(ix, iy, self.width, self.height, self.pixel_pitch)
    }

    pub fn dequantize(&self, dn: u16) -> f64 {
        f64::from(dn) / f64::from(self.max_dn()) * self.full_scale
    }
}

pub(crate) fn pixel_center(ix: usize, iy: usize, width: usize, height: usize, pitch: f64) -> Vector2<f64> {
    Vector2::new(
        (ix as f64 - (width / 2) as f64) * pitch,
        (iy as f64 - (height / 2) as f64) * pitch,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Absolute two-photon detuning at the sweep centre, Hz.
    pub center: f64,
    pub span: f64,
    pub step: f64,
}

impl SweepConfig {
    /// Default 20 kHz / 200 Hz sweep centred on `center`.
    pub fn around(center: f64) -> Self {
        SweepConfig {
            center,
            span: 20e3,
            step: 200.0,
        }
    }

    /// Default sweep centred on the upper Zeeman resonance of the field on
    /// the beam axis.
    pub fn on_plus_branch(scene: &Scene) -> Result<Self> {
        let b = scene.field_gauss_at(Vector2::zeros())?;
        Ok(Self::around(resonance_detunings(b, &scene.line).plus))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::domain("sweep center must be finite"));
        }
        if !(self.span.is_finite() && self.span > 0.0) {
            return Err(Error::domain("sweep span must be > 0"));
        }
        if !(self.step > 0.0 && self.step <= self.span) {
            return Err(Error::domain("sweep step must satisfy 0 < step <= span"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.span / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn detunings(&self) -> Vec<f64> {
        let start = self.center - 0.5 * self.span;
        (0..self.len()).map(|k| start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-frame additive noise standard deviation, transmission units.
    pub sigma_frame: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_frame: 0.01,
            seed: 1,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig {
            sigma_frame: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_frame.is_finite() && self.sigma_frame >= 0.0) {
            return Err(Error::domain("sigma_frame must be finite and >= 0"));
        }
        Ok(())
    }

    /// Standard deviation after averaging `frames` frames.
    pub fn averaged_sigma(&self, frames: u32) -> f64 {
        self.sigma_frame / f64::from(frames).sqrt()
    }
}

/// Everything that determines the noiseless signal at a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub wire: WireConfig,
    pub field_model: FieldModel,
    pub line: EitLineParams,
    pub beam: BeamProfile,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            wire: WireConfig::default(),
            field_model: FieldModel::Bare,
            line: EitLineParams::default(),
            beam: BeamProfile::default(),
        }
    }
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.field_model.validate(&self.wire)?;
        self.line.validate()?;
        self.beam.validate()
    }

    /// Transverse field magnitude at a beam-frame point, gauss.
    pub fn field_gauss_at(&self, point: Vector2<f64>) -> Result<f64> {
        let b = self.field_model.transverse_field(&self.wire, point)?;
        Ok(tesla_to_gauss(b.norm()))
    }
}

/// Validates a full acquisition and returns non-fatal warnings.
pub fn validate_acquisition(
    scene: &Scene,
    sweep: &SweepConfig,
    noise: &NoiseConfig,
    camera: &CameraConfig,
) -> Result<Vec<String>> {
    scene.validate()?;
    sweep.validate()?;
    noise.validate()?;
    camera.validate()?;
    let mut warnings = Vec::new();
    let averaged = noise.averaged_sigma(camera.frames_averaged);
    if averaged < camera.lsb() {
        warnings.push(format!(
            "averaged noise {averaged:.3e} is below one ADC step ({:.3e}); \
             traces will show quantisation plateaus",
            camera.lsb()
        ));
    }
    Ok(warnings)
}

/// Field magnitude at a pixel centre, gauss.
pub fn pixel_field(ix: usize, iy: usize, scene: &Scene, camera: &CameraConfig) -> Result<f64> {
    check_pixel(ix, iy, camera)?;
    scene.field_gauss_at(camera.pixel_center(ix, iy))
}

fn check_pixel(ix: usize, iy: usize, camera: &CameraConfig) -> Result<()> {
    if ix >= camera.width || iy >= camera.height {
        return Err(Error::domain(format!(
            "pixel ({ix}, {iy}) outside {}x{} sensor",
            camera.width, camera.height
        )));
    }
    Ok(())
}

/// Round-half-up ADC conversion of a transmission value.
pub fn quantize(value: f64, camera: &CameraConfig) -> u16 {
    let max = f64::from(camera.max_dn());
    // NaN clamps to 0
    let clamped = if value > 0.0 { value.min(camera.full_scale) } else { 0.0 };
    (clamped / camera.full_scale * max + 0.5).floor().min(max) as u16
}

/// Counter-based Gaussian noise for one pixel.
///
/// The ChaCha key comes from the seed, the stream id from the pixel indices
/// and the block position from the detuning index, so any draw can be
/// reproduced in isolation.
#[derive(Clone)]
pub struct PixelNoise {
    rng: ChaCha8Rng,
}

impl PixelNoise {
    // 32-bit words reserved per detuning sample; ample for the ziggurat sampler.
    const WORDS_PER_SAMPLE: u128 = 64;

    pub fn new(seed: u64, ix: usize, iy: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((iy as u64) << 32) | (ix as u64 & 0xFFFF_FFFF));
        PixelNoise { rng }
    }

    /// Standard normal draw for detuning index `k`.
    pub fn standard_normal(&mut self, k: usize) -> f64 {
        self.rng.set_word_pos(k as u128 * Self::WORDS_PER_SAMPLE);
        self.rng.sample(StandardNormal)
    }
}

/// Pre-quantisation averaged signal of one pixel over the sweep.
pub fn simulate_pixel_signal(
    ix: usize,
    iy: usize,
    scene: &Scene,
    detunings: &[f64],
    noise: &NoiseConfig,
    camera: &CameraConfig,
    rng: &mut PixelNoise,
) -> Result<Vec<f64>> {
    check_pixel(ix, iy, camera)?;
    let center = camera.pixel_center(ix, iy);
    let field = scene.field_gauss_at(center)?;
    let brightness = beam_intensity(center.x, center.y, &scene.beam);
    let sigma = noise.averaged_sigma(camera.frames_averaged);
    Ok(detunings
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let ideal = brightness * transmission(d, field, &scene.line);
            if sigma > 0.0 {
                ideal + sigma * rng.standard_normal(k)
            } else {
                ideal
            }
        })
        .collect())
}

/// Quantised trace of one pixel over the sweep.
pub fn simulate_pixel_trace(
    ix: usize,
    iy: usize,
    scene: &Scene,
    sweep: &SweepConfig,
    noise: &NoiseConfig,
    camera: &CameraConfig,
    rng: &mut PixelNoise,
) -> Result<Vec<u16>> {
    let signal = simulate_pixel_signal(ix, iy, scene, &sweep.detunings(), noise, camera, rng)?;
    Ok(signal.into_iter().map(|v| quantize(v, camera)).collect())
}

/// Provenance carried alongside the pixel data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StackMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
}

/// Detuning-major stack of quantised frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    detunings: Vec<f64>,
    frames: Vec<u16>,
    camera: CameraConfig,
    metadata: StackMetadata,
}

impl ImageStack {
    pub fn new(
        detunings: Vec<f64>,
        frames: Vec<u16>,
        camera: CameraConfig,
        metadata: StackMetadata,
    ) -> Result<Self> {
        camera.validate()?;
        if detunings.is_empty() {
            return Err(Error::format("stack has no detunings"));
        }
        if !detunings.iter().all(|d| d.is_finite()) {
            return Err(Error::format("detunings must be finite"));
        }
        if detunings.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::format("detunings must be strictly increasing"));
        }
        let expected = detunings.len() * camera.pixel_count();
        if frames.len() != expected {
            return Err(Error::format(format!(
                "expected {expected} samples, found {}",
                frames.len()
            )));
        }
        let max = camera.max_dn();
        if let Some(dn) = frames.iter().find(|&&dn| dn > max) {
            return Err(Error::format(format!(
                "DN {dn} exceeds {}-bit range",
                camera.bit_depth
            )));
        }
        Ok(ImageStack {
            detunings,
            frames,
            camera,
            metadata,
        })
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn camera(&self) -> &CameraConfig {
        &self.camera
    }

    pub fn metadata(&self) -> &StackMetadata {
        &self.metadata
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// All samples, detuning-major then row-major.
    pub fn samples(&self) -> &[u16] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[u16] {
        let n = self.camera.pixel_count();
        &self.frames[k * n..(k + 1) * n]
    }

    pub fn trace(&self, ix: usize, iy: usize) -> Vec<u16> {
        let n = self.camera.pixel_count();
        let offset = iy * self.camera.width + ix;
        (0..self.len()).map(|k| self.frames[k * n + offset]).collect()
    }
}

/// Simulates the complete stack.
pub fn simulate_stack(
    scene: &Scene,
    sweep: &SweepConfig,
    noise: &NoiseConfig,
    camera: &CameraConfig,
) -> Result<ImageStack> {
    validate_acquisition(scene, sweep, noise, camera)?;
    let detunings = sweep.detunings();
    let (w, n) = (camera.width, camera.pixel_count());

    let traces: Vec<Vec<u16>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % w, i / w);
            let mut rng = PixelNoise::new(noise.seed, ix, iy);
            simulate_pixel_signal(ix, iy, scene, &detunings, noise, camera, &mut rng)
                .map(|s| s.into_iter().map(|v| quantize(v, camera)).collect())
        })
        .collect::<Result<_>>()?;

    let mut frames = vec![0u16; n * detunings.len()];
    for (i, trace) in traces.iter().enumerate() {
        for (k, &dn) in trace.iter().enumerate() {
            frames[k * n + i] = dn;
        }
    }
    let metadata = StackMetadata {
        scene: Some(*scene),
        sweep: Some(*sweep),
        noise: Some(*noise),
        geometry: Some(GEOMETRY_CONVENTION.to_string()),
    };
    ImageStack::new(detunings, frames, *camera, metadata)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::eit_optics::beam_intensity;

    fn small_camera() -> CameraConfig {
        CameraConfig {
            width: 20,
            height: 16,
            pixel_pitch: 50e-6,
            ..CameraConfig::default()
        }
    }

    #[test]
    fn sweep_has_101_points() {
        let s = SweepConfig::around(6.834e9);
        assert_eq!(s.len(), 101);
        let d = s.detunings();
        assert_eq!(d[0], 6.834e9 - 10e3);
        assert_eq!(d[100], 6.834e9 + 10e3);
        assert!(d.windows(2).all(|w| (w[1] - w[0] - 200.0).abs() < 1e-3));
        assert!(SweepConfig { step: 3e4, ..s }.validate().is_err());
        assert!(SweepConfig { step: 0.0, ..s }.validate().is_err());
    }

    #[test]
    fn quantize_examples() {
        let c = CameraConfig::default();
        assert_eq!(quantize(1.0, &c), 4095);
        assert_eq!(quantize(7.0, &c), 4095);
        assert_eq!(quantize(0.0, &c), 0);
        assert_eq!(quantize(-0.2, &c), 0);
        assert_eq!(quantize(f64::NAN, &c), 0);
        assert_eq!(quantize(0.5, &c), 2048);
        let half_lsb = 0.5 / 4095.0;
        assert_eq!(quantize(half_lsb, &c), 1);
        assert_eq!(quantize(half_lsb * 0.999, &c), 0);
    }

    #[test]
    fn pixel_field_examples() {
        let scene = Scene::default();
        let camera = CameraConfig::default();
        let center = pixel_field(100, 100, &scene, &camera).unwrap();
        assert_relative_eq!(center * 1e3, 43.582_089_552_238_806, max_relative = 1e-12);
        // one pitch away from the wire (+x) lowers the field by pitch * B0 / rho0
        let next = pixel_field(101, 100, &scene, &camera).unwrap();
        assert_relative_eq!((center - next) * 1e3, 0.021_68, max_relative = 2e-3);
        let prev = pixel_field(99, 100, &scene, &camera).unwrap();
        assert!(prev > center);

        let dark = Scene {
            wire: WireConfig::new(0.0, 20.1e-3).unwrap(),
            ..scene
        };
        assert_eq!(pixel_field(3, 7, &dark, &camera).unwrap(), 0.0);
        assert!(pixel_field(200, 0, &scene, &camera).is_err());
    }

    #[test]
    fn flat_trace_without_contrast() {
        let scene = Scene {
            line: EitLineParams {
                contrast: 0.0,
                ..EitLineParams::default()
            },
            ..Scene::default()
        };
        let camera = small_camera();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let mut rng = PixelNoise::new(0, 5, 6);
        let trace =
            simulate_pixel_trace(5, 6, &scene, &sweep, &NoiseConfig::noiseless(), &camera, &mut rng).unwrap();
        let c = camera.pixel_center(5, 6);
        let expected = quantize(beam_intensity(c.x, c.y, &scene.beam) * 0.5, &camera);
        assert!(trace.iter().all(|&dn| dn == expected));
    }

    #[test]
    fn noiseless_peak_at_nearest_grid_point() {
        let scene = Scene::default();
        let camera = CameraConfig::default();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let d = sweep.detunings();
        for (ix, iy) in [(100, 100), (80, 95), (130, 110)] {
            let mut rng = PixelNoise::new(0, ix, iy);
            let signal =
                simulate_pixel_signal(ix, iy, &scene, &d, &NoiseConfig::noiseless(), &camera, &mut rng).unwrap();
            let argmax = (0..d.len()).fold(0, |best, k| if signal[k] > signal[best] { k } else { best });
            let nu = resonance_detunings(pixel_field(ix, iy, &scene, &camera).unwrap(), &scene.line).plus;
            let nearest = (0..d.len())
                .min_by(|&a, &b| (d[a] - nu).abs().total_cmp(&(d[b] - nu).abs()))
                .unwrap();
            assert_eq!(argmax, nearest);
        }
    }

    #[test]
    fn averaged_noise_std() {
        // 0.01 / sqrt(200) = 7.071e-4
        let scene = Scene::default();
        let camera = CameraConfig::default();
        let noise = NoiseConfig {
            sigma_frame: 0.01,
            seed: 42,
        };
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let d = sweep.detunings();
        let mut residuals = Vec::new();
        for ix in 60..160 {
            let mut clean = PixelNoise::new(0, ix, 100);
            let ideal =
                simulate_pixel_signal(ix, 100, &scene, &d, &NoiseConfig::noiseless(), &camera, &mut clean).unwrap();
            let mut rng = PixelNoise::new(noise.seed, ix, 100);
            let noisy = simulate_pixel_signal(ix, 100, &scene, &d, &noise, &camera, &mut rng).unwrap();
            residuals.extend(noisy.iter().zip(&ideal).map(|(a, b)| a - b));
        }
        assert!(residuals.len() >= 10_000);
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert_relative_eq!(std, 0.01 / 200f64.sqrt(), max_relative = 0.1);
    }

    #[test]
    fn pixel_noise_is_counter_based() {
        let mut a = PixelNoise::new(9, 3, 4);
        let forward: Vec<f64> = (0..10).map(|k| a.standard_normal(k)).collect();
        let mut b = PixelNoise::new(9, 3, 4);
        let backward: Vec<f64> = (0..10).rev().map(|k| b.standard_normal(k)).collect();
        let reversed: Vec<f64> = backward.into_iter().rev().collect();
        assert_eq!(forward, reversed);
        let mut other = PixelNoise::new(9, 4, 3);
        assert_ne!(other.standard_normal(0), forward[0]);
    }

    #[test]
    fn stack_is_deterministic() {
        let scene = Scene::default();
        let camera = small_camera();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let noise = NoiseConfig {
            sigma_frame: 0.05,
            seed: 11,
        };
        let a = simulate_stack(&scene, &sweep, &noise, &camera).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| simulate_stack(&scene, &sweep, &noise, &camera).unwrap());
        assert_eq!(a, b);
        let c = simulate_stack(&scene, &sweep, &NoiseConfig { seed: 12, ..noise }, &camera).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn stack_layout_matches_traces() {
        let scene = Scene::default();
        let camera = small_camera();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let noise = NoiseConfig {
            sigma_frame: 0.05,
            seed: 3,
        };
        let stack = simulate_stack(&scene, &sweep, &noise, &camera).unwrap();
        assert_eq!(stack.len(), 101);
        let mut rng = PixelNoise::new(3, 7, 9);
        let trace = simulate_pixel_trace(7, 9, &scene, &sweep, &noise, &camera, &mut rng).unwrap();
        assert_eq!(stack.trace(7, 9), trace);
        assert_eq!(stack.frame(4)[9 * camera.width + 7], trace[4]);
        assert_eq!(stack.metadata().noise, Some(noise));
    }

    #[test]
    fn noise_decreases_with_averaging() {
        let scene = Scene::default();
        let camera = small_camera();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let d = sweep.detunings();
        let variance = |frames: u32| {
            let cam = CameraConfig {
                frames_averaged: frames,
                bit_depth: 16,
                ..camera
            };
            let noise = NoiseConfig {
                sigma_frame: 0.02,
                seed: 5,
            };
            let mut sum = 0.0;
            let mut count = 0.0;
            for ix in 0..cam.width {
                let mut clean = PixelNoise::new(0, ix, 8);
                let ideal =
                    simulate_pixel_signal(ix, 8, &scene, &d, &NoiseConfig::noiseless(), &cam, &mut clean).unwrap();
                let mut rng = PixelNoise::new(noise.seed, ix, 8);
                let trace = simulate_pixel_trace(ix, 8, &scene, &sweep, &noise, &cam, &mut rng).unwrap();
                for (dn, v) in trace.iter().zip(&ideal) {
                    sum += (cam.dequantize(*dn) - v).powi(2);
                    count += 1.0;
                }
            }
            sum / count
        };
        let vars: Vec<f64> = [1, 4, 16, 64].iter().map(|&f| variance(f)).collect();
        for pair in vars.windows(2) {
            // expected ratio 4; 3-sigma band for ~2000 samples is well inside 2x
            assert!(pair[1] < pair[0], "{vars:?}");
        }
    }

    #[test]
    fn noiseless_16_bit_fidelity() {
        let scene = Scene::default();
        let camera = CameraConfig {
            bit_depth: 16,
            ..small_camera()
        };
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let stack = simulate_stack(&scene, &sweep, &NoiseConfig::noiseless(), &camera).unwrap();
        for iy in 0..camera.height {
            for ix in 0..camera.width {
                let c = camera.pixel_center(ix, iy);
                let b = pixel_field(ix, iy, &scene, &camera).unwrap();
                let beam = beam_intensity(c.x, c.y, &scene.beam);
                for (k, dn) in stack.trace(ix, iy).into_iter().enumerate() {
                    let ideal = beam * transmission(stack.detunings()[k], b, &scene.line);
                    assert!((camera.dequantize(dn) - ideal).abs() <= camera.lsb());
                }
            }
        }
    }

    #[test]
    fn field_variation_fits_inside_sweep() {
        let scene = Scene::default();
        let camera = CameraConfig::default();
        let left = pixel_field(0, 100, &scene, &camera).unwrap();
        let right = pixel_field(199, 100, &scene, &camera).unwrap();
        // ~4.3 mG across the field of view
        assert_relative_eq!((left - right) * 1e3, 4.315, max_relative = 0.01);
        let shift = 2.0 * scene.line.gyromagnetic * (left - right);
        assert!(shift > 6.0e3 && shift < 6.2e3);
        assert!(shift < SweepConfig::on_plus_branch(&scene).unwrap().span);
    }

    #[test]
    fn rejects_bad_stacks() {
        let camera = CameraConfig {
            width: 2,
            height: 1,
            ..CameraConfig::default()
        };
        let meta = StackMetadata::default();
        assert!(ImageStack::new(vec![1.0], vec![0, 4096], camera, meta.clone()).is_err());
        assert!(ImageStack::new(vec![1.0], vec![0], camera, meta.clone()).is_err());
        assert!(ImageStack::new(vec![2.0, 1.0], vec![0; 4], camera, meta.clone()).is_err());
        assert!(ImageStack::new(vec![1.0, 2.0], vec![0; 4], camera, meta).is_ok());
    }

    #[test]
    fn low_noise_warning() {
        let scene = Scene::default();
        let sweep = SweepConfig::on_plus_branch(&scene).unwrap();
        let camera = CameraConfig::default();
        let w = validate_acquisition(&scene, &sweep, &NoiseConfig::default(), &camera).unwrap();
        assert!(w.is_empty());
        let w = validate_acquisition(&scene, &sweep, &NoiseConfig::noiseless(), &camera).unwrap();
        assert_eq!(w.len(), 1);
    }

    proptest! {
        #[test]
        fn quantization_error_bound(v in -0.5f64..1.5, bits in 1u32..=16) {
            let c = CameraConfig { bit_depth: bits, ..CameraConfig::default() };
            let dn = quantize(v, &c);
            prop_assert!(dn <= c.max_dn());
            let clamped = v.clamp(0.0, c.full_scale);
            prop_assert!((c.dequantize(dn) - clamped).abs() <= c.full_scale / f64::from(1u32 << bits));
        }
    }
}
