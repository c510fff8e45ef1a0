//! Magnetic field forward models for a long straight wire and
//! finite-difference estimation of the field gradient tensor.
//!
//! Two coordinate frames are used:
//!
//! * the **wire frame**, in which the wire passes through the origin along
//!   [`WireConfig::axis`]; [`wire_field_vector`] and [`gradient_tensor`]
//!   examples use it;
//! * the **beam frame**, a 2-D transverse plane centred on the probe beam
//!   axis. The wire sits at `(-rho0, 0)`, so the field grows toward `-x`.
//!   [`FieldModel`], [`linearized_wire_field`] and [`shielded_wire_field`]
//!   work in this frame.
//!
//! All fields are in tesla.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::MU0;

/// Default stencil half-step for [`gradient_tensor`].
pub const DEFAULT_STENCIL_STEP: f64 = 1e-6;

/// A long straight current-carrying wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireConfig {
    /// Current in amperes; the sign follows `axis`.
    pub current: f64,
    /// Distance from the wire to the beam axis, meters.
    pub rho0: f64,
    /// Unit vector along the current direction.
    pub axis: [f64; 3],
}

impl WireConfig {
    /// Wire along `+z`.
    pub fn new(current: f64, rho0: f64) -> Result<Self> {
        let wire = WireConfig {
            current,
            rho0,
            axis: [0.0, 0.0, 1.0],
        };
        wire.validate()?;
        Ok(wire)
    }

    /// Replaces the axis, normalising it to unit length.
    pub fn with_axis(mut self, axis: Vector3<f64>) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("wire axis must be a finite nonzero vector"));
        }
        let unit = axis / n;
        self.axis = [unit.x, unit.y, unit.z];
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.current.is_finite() {
            return Err(Error::domain("wire current must be finite"));
        }
        if !(self.rho0.is_finite() && self.rho0 > 0.0) {
            return Err(Error::domain(format!(
                "wire standoff rho0 must be > 0, got {}",
                self.rho0
            )));
        }
        if (self.axis_vector().norm() - 1.0).abs() > 1e-12 {
            return Err(Error::domain("wire axis must have unit length"));
        }
        Ok(())
    }

    pub fn axis_vector(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }

    /// Transverse wire position in the beam frame.
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(-self.rho0, 0.0)
    }

    /// Field magnitude on the beam axis, `mu0 I / (2 pi rho0)`.
    pub fn axis_field(&self) -> f64 {
        MU0 * self.current / (2.0 * PI * self.rho0)
    }

    /// Current along `+z` for the planar models. Those models need the wire
    /// parallel to the optical axis.
    fn planar_current(&self) -> Result<f64> {
        let z = self.axis[2];
        if (z.abs() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(
                "planar field models require the wire parallel to the optical axis",
            ));
        }
        Ok(self.current * z.signum())
    }
}

impl Default for WireConfig {
    /// 438 mA at 20.1 mm.
    fn default() -> Self {
        WireConfig {
            current: 0.438,
            rho0: 20.1e-3,
            axis: [0.0, 0.0, 1.0],
        }
    }
}

/// Single permeable cylindrical shield parallel to the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShieldConfig {
    /// Inner radius, meters.
    pub radius: f64,
    /// Relative permeability of the shield material.
    pub mu_r: f64,
    /// Shield axis position in the beam frame, meters.
    pub center: [f64; 2],
}

impl ShieldConfig {
    pub fn center_vector(&self) -> Vector2<f64> {
        Vector2::from(self.center)
    }

    pub fn validate(&self, wire: &WireConfig) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::domain("shield radius must be > 0"));
        }
        if !(self.mu_r.is_finite() && self.mu_r >= 1.0) {
            return Err(Error::domain("shield mu_r must be >= 1"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::domain("shield center must be finite"));
        }
        if (wire.position() - self.center_vector()).norm() >= self.radius {
            return Err(Error::domain("wire must lie strictly inside the shield"));
        }
        Ok(())
    }
}

impl Default for ShieldConfig {
    /// Placeholder geometry: R = 30 mm, mu_r = 1e5, centred on the beam.
    fn default() -> Self {
        ShieldConfig {
            radius: 30e-3,
            mu_r: 1e5,
            center: [0.0, 0.0],
        }
    }
}

/// Which forward model maps a beam-frame point to a transverse field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldModel {
    Bare,
    Linearized,
    Shielded { shield: ShieldConfig },
}

impl FieldModel {
    pub fn name(&self) -> &'static str {
        match self {
            FieldModel::Bare => "bare",
            FieldModel::Linearized => "linearized",
            FieldModel::Shielded { .. } => "shielded",
        }
    }

    pub fn validate(&self, wire: &WireConfig) -> Result<()> {
        wire.validate()?;
        if let FieldModel::Shielded { shield } = self {
            shield.validate(wire)?;
        }
        Ok(())
    }

    /// Transverse field at a beam-frame point.
    pub fn transverse_field(&self, wire: &WireConfig, point: Vector2<f64>) -> Result<Vector2<f64>> {
        match self {
            FieldModel::Bare => {
                let current = wire.planar_current()?;
                line_current_field(point, wire.position(), current)
                    .ok_or_else(|| Error::domain("field point lies on the wire"))
            }
            FieldModel::Linearized => Ok(Vector2::new(0.0, linearized_wire_field(point.x, wire))),
            FieldModel::Shielded { shield } => shielded_wire_field(point, wire, shield),
        }
    }
}

/// `mu0 I / (2 pi rho)`, signed with the current.
pub fn wire_field_magnitude(rho: f64, wire: &WireConfig) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::domain(format!(
            "distance from wire must be > 0, got {rho}"
        )));
    }
    Ok(MU0 * wire.current / (2.0 * PI * rho))
}

/// Azimuthal field of the wire at a wire-frame point.
pub fn wire_field_vector(point: Vector3<f64>, wire: &WireConfig) -> Result<Vector3<f64>> {
    let axis = wire.axis_vector();
    let radial = point - axis * axis.dot(&point);
    let rho = radial.norm();
    if !(rho > 0.0) {
        return Err(Error::domain("field point lies on the wire axis"));
    }
    let magnitude = wire_field_magnitude(rho, wire)?;
    Ok(axis.cross(&radial) * (magnitude / rho))
}

/// First-order expansion of the wire field about the beam axis, for a
/// displacement `dx` away from the wire.
pub fn linearized_wire_field(dx: f64, wire: &WireConfig) -> f64 {
    wire.axis_field() * (1.0 - dx / wire.rho0)
}

/// Field of a `+z` line current at `source`, or `None` on the source itself.
fn line_current_field(point: Vector2<f64>, source: Vector2<f64>, current: f64) -> Option<Vector2<f64>> {
    let d = point - source;
    let r2 = d.norm_squared();
    if r2 == 0.0 {
        return None;
    }
    let k = MU0 * current / (2.0 * PI * r2);
    Some(Vector2::new(-d.y, d.x) * k)
}

/// Field inside a permeable cylinder of a wire parallel to its axis.
///
/// Interior solution: the real current plus an image current
/// `I (mu_r - 1) / (mu_r + 1)` at the inverse point `R^2 / a` on the same
/// radial ray, where `a` is the wire's distance from the shield axis.
pub fn shielded_wire_field(
    point: Vector2<f64>,
    wire: &WireConfig,
    shield: &ShieldConfig,
) -> Result<Vector2<f64>> {
    shield.validate(wire)?;
    let current = wire.planar_current()?;
    let center = shield.center_vector();
    if (point - center).norm() >= shield.radius {
        return Err(Error::domain("field point lies outside the shield"));
    }
    let wire_pos = wire.position();
    let direct = line_current_field(point, wire_pos, current)
        .ok_or_else(|| Error::domain("field point lies on the wire"))?;

    let a_vec = wire_pos - center;
    let a2 = a_vec.norm_squared();
    if a2 == 0.0 {
        // image at infinity
        return Ok(direct);
    }
    let image_pos = center + a_vec * (shield.radius * shield.radius / a2);
    let image_current = current * (shield.mu_r - 1.0) / (shield.mu_r + 1.0);
    // image_pos is outside the shield and the point is inside, so they differ
    let image = line_current_field(point, image_pos, image_current).unwrap_or_default();
    Ok(direct + image)
}

/// Field derivatives `∂B_i/∂x_j` in T/m, stored at `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientTensor(pub Matrix3<f64>);

impl GradientTensor {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().all(|v| v.is_finite()) {
            Ok(GradientTensor(m))
        } else {
            Err(Error::domain("gradient tensor entries must be finite"))
        }
    }

    pub fn zero() -> Self {
        GradientTensor(Matrix3::zeros())
    }

    /// `∂B_component / ∂x_direction`.
    pub fn entry(&self, component: usize, direction: usize) -> f64 {
        self.0[(component, direction)]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Central-difference gradient tensor of `field` at `point` with half-step `h`.
pub fn gradient_tensor<F>(field: F, point: Vector3<f64>, h: f64) -> Result<GradientTensor>
where
    F: Fn(Vector3<f64>) -> Result<Vector3<f64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("stencil step must be > 0, got {h}")));
    }
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let mut step = Vector3::zeros();
        step[j] = h;
        let plus = field(point + step)?;
        let minus = field(point - step)?;
        let column = (plus - minus) / (2.0 * h);
        m.set_column(j, &column);
    }
    GradientTensor::new(m)
}

/// The four source-free constraints on a gradient tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellResiduals {
    /// Trace, T/m.
    pub divergence: f64,
    /// Curl from the antisymmetric part, T/m.
    pub curl: Vector3<f64>,
}

impl MaxwellResiduals {
    pub fn constraints(&self) -> [f64; 4] {
        [self.divergence, self.curl.x, self.curl.y, self.curl.z]
    }

    /// Euclidean norm over all four constraints.
    pub fn norm(&self) -> f64 {
        (self.divergence * self.divergence + self.curl.norm_squared()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.constraints().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn maxwell_residuals(t: &GradientTensor) -> MaxwellResiduals {
    let m = t.matrix();
    MaxwellResiduals {
        divergence: m.trace(),
        curl: Vector3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        ),
    }
}
