//! Gravitational phase between two horizontal fiber arms at different heights.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{finite, positive};
use crate::Result;

/// Physical constants, SI units. Defaults are CODATA values with standard
/// gravity and a mean Earth radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub c: f64,
    pub g: f64,
    pub planck: f64,
    pub earth_radius: f64,
    /// Sidereal rotation rate.
    pub earth_angular_speed: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c: 2.997_924_58e8,
            g: 9.81,
            planck: 6.626_070_15e-34,
            earth_radius: 6.371e6,
            earth_angular_speed: 7.292_115e-5,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        positive(self.c, "c")?;
        finite(self.g, "g")?;
        positive(self.planck, "planck")?;
        positive(self.earth_radius, "earth_radius")?;
        finite(self.earth_angular_speed, "earth_angular_speed")
    }
}

/// Two arms of equal length separated vertically by `separation` when the
/// interferometer plane is vertical; `inclination` rotates the plane from
/// horizontal (0) to vertical (pi/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerGeometry {
    pub arm_length: f64,
    pub separation: f64,
    pub inclination: f64,
}

impl InterferometerGeometry {
    pub fn new(arm_length: f64, separation: f64, inclination: f64) -> Result<Self> {
        let g = Self {
            arm_length,
            separation,
            inclination,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.arm_length, "arm_length")?;
        positive(self.separation, "separation")?;
        finite(self.inclination, "inclination")
    }

    /// Enclosed area `A = h l`.
    pub fn area(&self) -> f64 {
        self.arm_length * self.separation
    }

    pub fn with_inclination(self, inclination: f64) -> Self {
        Self {
            inclination,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberOptical {
    pub group_index: f64,
    pub wavelength: f64,
    /// dB/km
    pub attenuation: f64,
}

impl FiberOptical {
    pub fn validate(&self) -> Result<()> {
        crate::error::ensure(
            self.group_index.is_finite() && self.group_index >= 1.0,
            "group_index",
            format!("must be >= 1, got {}", self.group_index),
        )?;
        positive(self.wavelength, "wavelength")?;
        crate::error::non_negative(self.attenuation, "attenuation")
    }

    /// Group velocity `c / N`.
    pub fn group_velocity(&self, c: f64) -> f64 {
        c / self.group_index
    }

    pub fn angular_frequency(&self, c: f64) -> f64 {
        2.0 * PI * c / self.wavelength
    }
}

/// `2 pi A N g / (lambda c^2) * sin(theta)`.
///
/// Linear in the enclosed area and odd in the inclination; the sign follows
/// the convention that the upper arm accumulates the larger phase.
pub fn gravitational_phase(
    geometry: &InterferometerGeometry,
    fiber: &FiberOptical,
    constants: &PhysicalConstants,
) -> Result<f64> {
    geometry.validate()?;
    fiber.validate()?;
    constants.validate()?;
    Ok(phase_amplitude(geometry, fiber, constants) * geometry.inclination.sin())
}

/// Vertical-configuration phase, without the `sin(theta)` factor.
pub(crate) fn phase_amplitude(
    geometry: &InterferometerGeometry,
    fiber: &FiberOptical,
    constants: &PhysicalConstants,
) -> f64 {
    2.0 * PI * geometry.area() * fiber.group_index * constants.g
        / (fiber.wavelength * constants.c * constants.c)
}

/// Output port probabilities `(P+, P-)` of a lossless balanced
/// interferometer with scalar visibility `visibility`.
pub fn detection_probabilities(delta_phi_g: f64, phi: f64, visibility: f64) -> (f64, f64) {
    let x = visibility * (delta_phi_g + phi).cos();
    (0.5 * (1.0 + x), 0.5 * (1.0 - x))
}

/// `h / (c lambda)`.
pub fn effective_photon_mass(wavelength: f64, constants: &PhysicalConstants) -> Result<f64> {
    positive(wavelength, "wavelength")?;
    Ok(constants.planck / (constants.c * wavelength))
}
