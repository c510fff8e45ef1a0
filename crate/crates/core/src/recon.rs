//! Field-map reconstruction from an image stack.
//!
//! Per pixel: take the median DN over the sweep as the beam brightness and
//! keep pixels brighter than a fraction of the brightest one; smooth the
//! trace with a centred moving average, find its maximum (optionally refined
//! by a three-point parabola) and invert the Zeeman resonance condition.
//!
//! Also here: the two-run uncertainty estimate and the linewidth/S-N
//! sensitivity bound `gamma / (2 g_m * snr * sqrt(n))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eit_optics::EitLineParams;
use crate::error::{Error, Result};
use crate::stack_sim::{pixel_center, ImageStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refine {
    Argmax,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    /// Odd moving-average length in samples.
    pub lowpass_window: usize,
    pub branch: Branch,
    /// Fraction of the brightest pixel's brightness a pixel must reach.
    pub mask_threshold: f64,
    pub refine: Refine,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            lowpass_window: 7,
            branch: Branch::Plus,
            mask_threshold: 0.5,
            refine: Refine::Parabolic,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lowpass_window == 0 || self.lowpass_window.is_multiple_of(2) {
            return Err(Error::domain("low-pass window must be odd and >= 1"));
        }
        if !(self.mask_threshold > 0.0 && self.mask_threshold < 1.0) {
            return Err(Error::domain("mask threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Centred moving average. Near the ends the window shrinks symmetrically
/// to the samples available, so the output has no phase shift.
pub fn lowpass(trace: &[f64], window: usize) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::domain("cannot filter an empty trace"));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::domain(format!("low-pass window must be odd, got {window}")));
    }
    if window > trace.len() {
        return Err(Error::domain(format!(
            "low-pass window {window} exceeds trace length {}",
            trace.len()
        )));
    }
    let n = trace.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in trace {
        prefix.push(prefix.last().unwrap() + v);
    }
    Ok((0..n)
        .map(|i| {
            let k = half.min(i).min(n - 1 - i);
            let (lo, hi) = (i - k, i + k + 1);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

/// Detuning of the trace maximum.
///
/// Ties go to the lower detuning. A maximum on the first or last sample is
/// reported as [`Error::PeakAtEdge`].
pub fn locate_peak(trace: &[f64], detunings: &[f64], refine: Refine) -> Result<f64> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::domain("peak search needs at least 3 samples"));
    }
    if detunings.len() != n {
        return Err(Error::domain("trace and detuning lengths differ"));
    }
    let step = (detunings[n - 1] - detunings[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::domain("detunings must be strictly increasing"));
    }
    let uniform = detunings
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-6 * step);
    if !uniform {
        return Err(Error::domain("detunings must be uniformly spaced"));
    }

    let mut best = 0;
    for (i, &v) in trace.iter().enumerate() {
        if v > trace[best] {
            best = i;
        }
    }
    if best == 0 || best == n - 1 {
        return Err(Error::PeakAtEdge { index: best, len: n });
    }
    let offset = match refine {
        Refine::Argmax => 0.0,
        Refine::Parabolic => parabolic_offset(trace[best - 1], trace[best], trace[best + 1]),
    };
    Ok(detunings[best] + offset * step)
}

/// Vertex of the parabola through `(-1, fm), (0, f0), (1, fp)`, where `f0`
/// is the largest of the three. The result lies in `[-0.5, 0.5]`.
fn parabolic_offset(fm: f64, f0: f64, fp: f64) -> f64 {
    let curvature = fm - 2.0 * f0 + fp;
    if curvature >= 0.0 {
        // flat top
        return 0.0;
    }
    (0.5 * (fm - fp) / curvature).clamp(-0.5, 0.5)
}

/// Field magnitude in gauss for a resonance found at `nu_peak` on `branch`.
pub fn detuning_to_field(nu_peak: f64, p: &EitLineParams, branch: Branch) -> f64 {
    let shift = (nu_peak - p.hfs_frequency - p.light_shift_offset) / (2.0 * p.gyromagnetic);
    match branch {
        Branch::Plus => shift,
        Branch::Minus => -shift,
    }
}

/// Settings a field map was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub detuning_start: f64,
    pub detuning_step: f64,
    pub detuning_count: usize,
    pub line: EitLineParams,
    pub recon: ReconConfig,
}

/// Per-pixel field magnitude in gauss. Masked pixels hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub width: usize,
    pub height: usize,
    /// Meters.
    pub pixel_pitch: f64,
    values: Vec<f64>,
    mask: Vec<bool>,
    pub provenance: Option<Provenance>,
}

impl FieldMap {
    /// Builds a map from optional per-pixel values, row-major.
    pub fn from_values(width: usize, height: usize, pixel_pitch: f64, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::format(format!(
                "{width}x{height} map needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::format("valid field values must be finite"));
        }
        let mask = values.iter().map(Option::is_some).collect();
        let values = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(FieldMap {
            width,
            height,
            pixel_pitch,
            values,
            mask,
            provenance: None,
        })
    }

    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        let i = iy * self.width + ix;
        self.mask[i].then(|| self.values[i])
    }

    pub fn is_valid(&self, ix: usize, iy: usize) -> bool {
        self.mask[iy * self.width + ix]
    }

    /// Raw values with `NaN` in masked pixels.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.values.iter().zip(&self.mask).map(|(&v, &m)| m.then_some(v))
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Beam-frame coordinates of a pixel centre, meters.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let c = pixel_center(ix, iy, self.width, self.height, self.pixel_pitch);
        (c.x, c.y)
    }

    /// Row index of the `y = 0` slice.
    pub fn center_row(&self) -> usize {
        self.height / 2
    }

    pub fn same_shape(&self, other: &FieldMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Counters describing how reconstruction went.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReconDiagnostics {
    pub pixels: usize,
    /// Pixels passing the brightness mask.
    pub in_beam: usize,
    /// In-beam pixels whose maximum sat on the sweep edge.
    pub peak_at_edge: usize,
    pub valid: usize,
    /// Gauss, over valid pixels.
    pub min_field: Option<f64>,
    pub max_field: Option<f64>,
}

impl ReconDiagnostics {
    pub fn failure_fraction(&self) -> f64 {
        if self.in_beam == 0 {
            0.0
        } else {
            self.peak_at_edge as f64 / self.in_beam as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub map: FieldMap,
    pub diagnostics: ReconDiagnostics,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

enum PixelOutcome {
    Dark,
    Edge,
    Field(f64),
}

pub fn reconstruct_map(stack: &ImageStack, p: &EitLineParams, cfg: &ReconConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let (w, h) = (stack.width(), stack.height());
    let n = w * h;
    if stack.samples().len() != n * stack.len() {
        return Err(Error::format("stack dimensions do not match its sample count"));
    }
    if stack.len() < 3 {
        return Err(Error::domain("reconstruction needs at least 3 detunings"));
    }
    if cfg.lowpass_window > stack.len() {
        return Err(Error::domain("low-pass window longer than the sweep"));
    }
    let detunings = stack.detunings();

    let traces: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| stack.trace(i % w, i / w).into_iter().map(f64::from).collect())
        .collect();
    let brightness: Vec<f64> = traces.par_iter().map(|t| median(&mut t.clone())).collect();
    let brightest = brightness.iter().copied().fold(0.0, f64::max);
    let cutoff = cfg.mask_threshold * brightest;

    let outcomes: Vec<PixelOutcome> = traces
        .par_iter()
        .zip(&brightness)
        .map(|(trace, &b)| {
            if !(b > 0.0 && b >= cutoff) {
                return Ok(PixelOutcome::Dark);
            }
            let smooth = lowpass(trace, cfg.lowpass_window)?;
            match locate_peak(&smooth, detunings, cfg.refine) {
                Ok(nu) => Ok(PixelOutcome::Field(detuning_to_field(nu, p, cfg.branch))),
                Err(Error::PeakAtEdge { .. }) => Ok(PixelOutcome::Edge),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = ReconDiagnostics {
        pixels: n,
        ..ReconDiagnostics::default()
    };
    let mut values = Vec::with_capacity(n);
    for o in &outcomes {
        match *o {
            PixelOutcome::Dark => values.push(None),
            PixelOutcome::Edge => {
                diagnostics.in_beam += 1;
                diagnostics.peak_at_edge += 1;
                values.push(None);
            }
            PixelOutcome::Field(b) => {
                diagnostics.in_beam += 1;
                diagnostics.valid += 1;
                diagnostics.min_field = Some(diagnostics.min_field.map_or(b, |m: f64| m.min(b)));
                diagnostics.max_field = Some(diagnostics.max_field.map_or(b, |m: f64| m.max(b)));
                values.push(Some(b));
            }
        }
    }

    let mut map = FieldMap::from_values(w, h, stack.camera().pixel_pitch, values)?;
    map.provenance = Some(Provenance {
        detuning_start: detunings[0],
        detuning_step: (detunings[detunings.len() - 1] - detunings[0]) / (detunings.len() - 1) as f64,
        detuning_count: detunings.len(),
        line: *p,
        recon: *cfg,
    });
    Ok(Reconstruction { map, diagnostics })
}

#[derive(Debug, Clone)]
pub struct Uncertainty {
    /// Gauss, `None` outside the mask intersection.
    pub per_pixel: Vec<Option<f64>>,
    /// Root mean square over the mask intersection, gauss.
    pub rms: f64,
    pub count: usize,
}

/// Single-run standard deviation estimated from two runs, `|a - b| / sqrt(2)`.
pub fn uncertainty_map(a: &FieldMap, b: &FieldMap) -> Result<Uncertainty> {
    if !a.same_shape(b) {
        return Err(Error::format(format!(
            "map shapes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let per_pixel: Vec<Option<f64>> = a
        .values()
        .zip(b.values())
        .map(|(x, y)| Some((x? - y?).abs() / std::f64::consts::SQRT_2))
        .collect();
    let (sum, count) = per_pixel
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        return Err(Error::domain("maps have no valid pixels in common"));
    }
    Ok(Uncertainty {
        per_pixel,
        rms: (sum / count as f64).sqrt(),
        count,
    })
}

/// Field resolution in gauss for a Lorentzian resonance of width `gamma` (Hz)
/// sampled `n` times per linewidth at signal-to-noise `snr`.
pub fn theoretical_sensitivity(gamma: f64, snr: f64, n: f64, gyromagnetic: f64) -> Result<f64> {
    for (name, v) in [("gamma", gamma), ("snr", snr), ("n", n), ("g_m", gyromagnetic)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(gamma / (2.0 * gyromagnetic * snr * n.sqrt()))
}

/// Signal-to-noise of a single trace: resonance height above the median
/// over the per-sample noise.
///
/// Height is the smoothed maximum minus the median. Noise comes from second
/// differences, `std(d2) / sqrt(6)`, which mostly cancel the slowly varying
/// resonance.
pub fn trace_snr(trace: &[f64], window: usize) -> Result<f64> {
    if trace.len() < 3 {
        return Err(Error::domain("S/N estimate needs at least 3 samples"));
    }
    let smooth = lowpass(trace, window)?;
    let peak = smooth.iter().copied().fold(f64::MIN, f64::max);
    let signal = peak - median(&mut trace.to_vec());
    let diffs: Vec<f64> = trace.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let var = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
    let noise = (var / 6.0).sqrt();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / noise)
}

/// Median [`trace_snr`] over the pixels that pass the brightness mask.
pub fn median_snr(stack: &ImageStack, cfg: &ReconConfig) -> Result<f64> {
    let (w, n) = (stack.width(), stack.width() * stack.height());
    let traces: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| stack.trace(i % w, i / w).into_iter().map(f64::from).collect())
        .collect();
    let brightness: Vec<f64> = traces.par_iter().map(|t| median(&mut t.clone())).collect();
    let cutoff = cfg.mask_threshold * brightness.iter().copied().fold(0.0, f64::max);
    let mut snrs: Vec<f64> = traces
        .par_iter()
        .zip(&brightness)
        .filter(|(_, &b)| b > 0.0 && b >= cutoff)
        .map(|(t, _)| trace_snr(t, cfg.lowpass_window))
        .collect::<Result<_>>()?;
    if snrs.is_empty() {
        return Err(Error::domain("no pixels pass the brightness mask"));
    }
    Ok(median(&mut snrs))
}
