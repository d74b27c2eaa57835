//! Gaussian single-photon pulses in dispersive fiber and the visibility they
//! leave in the interferometer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{ensure, finite, non_negative, positive};
use crate::Result;

/// Spectral amplitude `~ exp(-(w - w0)^2 / (4 sigma^2))`, so that the
/// spectral intensity has standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    /// `w0`, rad/s
    pub carrier: f64,
    /// `sigma`, rad/s
    pub spectral_width: f64,
    /// `t0`, time the peak crosses `z = 0`.
    pub peak_time: f64,
}

impl PulseModel {
    /// Pulse with spectral intensity standard deviation `bandwidth_hz`.
    pub fn from_bandwidth(wavelength: f64, bandwidth_hz: f64, c: f64) -> Result<Self> {
        positive(wavelength, "wavelength")?;
        positive(bandwidth_hz, "bandwidth")?;
        Ok(Self {
            carrier: TAU * c / wavelength,
            spectral_width: TAU * bandwidth_hz,
            peak_time: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.carrier, "carrier")?;
        positive(self.spectral_width, "spectral_width")?;
        finite(self.peak_time, "peak_time")
    }

    /// `tau0 = 1 / (2 sigma)`, standard deviation of `|f(0, t)|^2`.
    pub fn initial_width(&self) -> f64 {
        0.5 / self.spectral_width
    }

    /// Spectral width converted to wavelength, `lambda^2 sigma / (2 pi c)`.
    pub fn wavelength_width(&self, c: f64) -> f64 {
        let lambda = TAU * c / self.carrier;
        lambda * lambda * self.spectral_width / (TAU * c)
    }
}

/// `f(w) = (2 pi sigma^2)^(-1/4) exp(-i (w - w0) t0 - (w - w0)^2 / (4 sigma^2))`,
/// normalised so that `integral |f|^2 dw = 1`.
pub fn spectral_amplitude(pulse: &PulseModel, omega: f64) -> Complex64 {
    let d = omega - pulse.carrier;
    let s = pulse.spectral_width;
    let mag = (TAU * s * s).powf(-0.25) * (-d * d / (4.0 * s * s)).exp();
    Complex64::from_polar(mag, -d * pulse.peak_time)
}

/// Output beam splitter, `a4 = T a1 + R a2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterCoeffs {
    pub reflection: Complex64,
    pub transmission: Complex64,
}

impl BeamSplitterCoeffs {
    /// 50:50 splitter with the reflected port advanced by `pi/2`.
    pub fn balanced() -> Self {
        Self {
            reflection: Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
            transmission: Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.reflection.norm_sqr() + self.transmission.norm_sqr();
        ensure(
            (sum - 1.0).abs() <= 1e-12,
            "beam_splitter",
            format!("|R|^2 + |T|^2 must be 1, got {sum}"),
        )
    }

    /// `|R|^2 |T|^2`, the weight of the interference flux at one port.
    pub fn port_weight(&self) -> f64 {
        self.reflection.norm_sqr() * self.transmission.norm_sqr()
    }
}

/// One fiber arm, expanded to second order in `w - w0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberDispersion {
    /// `rho = d^2 k / d w^2`, s^2/m
    pub gvd: f64,
    pub group_velocity: f64,
    /// `k0`, 1/m
    pub wavenumber: f64,
    pub length: f64,
    pub wavelength: f64,
    /// `dlambda` for the standard broadening `D_m l dlambda`, m.
    pub source_bandwidth: f64,
}

impl FiberDispersion {
    /// From a dispersion coefficient in ps/(km nm).
    pub fn from_coefficient(
        coefficient_ps_km_nm: f64,
        wavelength: f64,
        length: f64,
        group_index: f64,
        source_bandwidth: f64,
        c: f64,
    ) -> Result<Self> {
        finite(coefficient_ps_km_nm, "dispersion")?;
        positive(wavelength, "wavelength")?;
        let d_si = coefficient_ps_km_nm * 1e-6;
        let fiber = Self {
            gvd: -d_si * wavelength * wavelength / (TAU * c),
            group_velocity: c / group_index,
            wavenumber: TAU * group_index / wavelength,
            length,
            wavelength,
            source_bandwidth,
        };
        fiber.validate()?;
        Ok(fiber)
    }

    pub fn validate(&self) -> Result<()> {
        finite(self.gvd, "gvd")?;
        positive(self.group_velocity, "group_velocity")?;
        finite(self.wavenumber, "wavenumber")?;
        non_negative(self.length, "length")?;
        positive(self.wavelength, "wavelength")?;
        non_negative(self.source_bandwidth, "source_bandwidth")
    }

    /// `D_m = -2 pi c rho / lambda^2 * 1e6`, ps/(km nm).
    pub fn coefficient(&self, c: f64) -> f64 {
        -TAU * c * self.gvd / (self.wavelength * self.wavelength) * 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalWidth {
    /// `tau(z)`
    pub tau: f64,
    pub tau0: f64,
    /// `rho z / (2 tau0)`, so that `tau^2 = tau0^2 + dtau^2`.
    pub broadening: f64,
    /// `D_m l dlambda`, the spectral-shape-agnostic estimate.
    pub broadening_standard: f64,
}

/// Width of the pulse after `disp.length` of fiber.
pub fn temporal_width(pulse: &PulseModel, disp: &FiberDispersion, c: f64) -> Result<TemporalWidth> {
    pulse.validate()?;
    disp.validate()?;
    let tau0 = pulse.initial_width();
    let broadening = disp.gvd * disp.length / (2.0 * tau0);
    let standard =
        disp.coefficient(c).abs() * 1e-12 * (disp.length * 1e-3) * (disp.source_bandwidth * 1e9);
    Ok(TemporalWidth {
        tau: tau0.hypot(broadening),
        tau0,
        broadening: broadening.abs(),
        broadening_standard: standard,
    })
}

/// Fringe visibility left by unequal widths and a relative delay:
/// `sqrt(2 tau tau' / (tau^2 + tau'^2)) exp(-dt^2 / (4 (tau^2 + tau'^2)))`.
pub fn dispersion_visibility(tau: f64, tau_prime: f64, delay: f64) -> Result<f64> {
    positive(tau, "tau")?;
    positive(tau_prime, "tau_prime")?;
    finite(delay, "delay")?;
    let s = tau * tau + tau_prime * tau_prime;
    Ok((2.0 * tau * tau_prime / s).sqrt() * (-delay * delay / (4.0 * s)).exp())
}

/// Output probabilities with dispersive arms. The envelope delay between
/// the arms is `dphi_g / w0`.
pub fn dispersive_detection_probability(
    tau: f64,
    tau_prime: f64,
    delta_phi_g: f64,
    phi: f64,
    carrier: f64,
) -> Result<(f64, f64)> {
    positive(carrier, "carrier")?;
    let v = dispersion_visibility(tau, tau_prime, delta_phi_g / carrier)?;
    Ok(crate::phase::detection_probabilities(delta_phi_g, phi, v))
}

/// Phase of `f(z, t)` beyond `w0 t - k0 z`:
/// `-atan(rho z / (2 tau0^2)) / 2 + rho z s^2 / (8 tau0^2 tau^2)` with
/// `s = t - z / v_g - t0`.
pub fn chirp_phase(pulse: &PulseModel, disp: &FiberDispersion, t: f64) -> Result<f64> {
    pulse.validate()?;
    disp.validate()?;
    let tau0 = pulse.initial_width();
    let rz = disp.gvd * disp.length;
    let tau_sq = tau0 * tau0 + (rz / (2.0 * tau0)).powi(2);
    let s = t - disp.length / disp.group_velocity - pulse.peak_time;
    Ok(-0.5 * (rz / (2.0 * tau0 * tau0)).atan() + rz * s * s / (8.0 * tau0 * tau0 * tau_sq))
}

/// `|f(z, t)|`, the normalised envelope.
pub fn envelope(pulse: &PulseModel, disp: &FiberDispersion, t: f64, c: f64) -> Result<f64> {
    let w = temporal_width(pulse, disp, c)?;
    let s = t - disp.length / disp.group_velocity - pulse.peak_time;
    Ok((2.0 * PI * w.tau * w.tau).powf(-0.25) * (-s * s / (4.0 * w.tau * w.tau)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 2.997_924_58e8;

    fn fiber(d: f64, len: f64) -> FiberDispersion {
        let pulse = PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap();
        FiberDispersion::from_coefficient(d, 1550e-9, len, 1.468, pulse.wavelength_width(C), C)
            .unwrap()
    }

    #[test]
    fn no_length_no_broadening() {
        let p = PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap();
        let w = temporal_width(&p, &fiber(18.0, 0.0), C).unwrap();
        assert_eq!(w.tau, w.tau0);
    }

    #[test]
    fn coefficient_round_trips() {
        let f = fiber(18.0, 1.0);
        assert!((f.coefficient(C) - 18.0).abs() < 1e-12);
        assert!(f.gvd < 0.0);
    }

    #[test]
    fn telecom_broadening() {
        let p = PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap();
        let w = temporal_width(&p, &fiber(18.0, 1e5), C).unwrap();
        assert!((p.wavelength_width(C) - 0.8014e-9).abs() < 1e-12);
        assert!((w.broadening - 1.4426e-9).abs() < 1e-12, "{}", w.broadening);
        assert!((w.broadening - w.broadening_standard).abs() < 1e-12 * w.broadening);
    }

    #[test]
    fn equal_widths_no_delay_full_visibility() {
        assert_eq!(dispersion_visibility(2e-12, 2e-12, 0.0).unwrap(), 1.0);
        let (p, m) = dispersive_detection_probability(1e-9, 1e-9, 0.0, 0.0, 1.2e15).unwrap();
        assert_eq!((p, m), (1.0, 0.0));
    }

    #[test]
    fn spectral_amplitude_is_normalised_gaussian() {
        let p = PulseModel {
            peak_time: 2e-12,
            ..PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap()
        };
        let (w0, s) = (p.carrier, p.spectral_width);
        let peak = spectral_amplitude(
            &PulseModel {
                peak_time: 0.0,
                ..p
            },
            w0,
        );
        assert_eq!(peak.im, 0.0);
        assert!((peak.re - (TAU * s * s).powf(-0.25)).abs() < 1e-15 * peak.re);
        let edge = spectral_amplitude(&p, w0 + s * 2f64.sqrt()).norm_sqr() / peak.norm_sqr();
        assert!((edge - (-1.0f64).exp()).abs() < 1e-12);
        let norm = crate::numerics::simpson(
            |w| spectral_amplitude(&p, w).norm_sqr(),
            w0 - 14.0 * s,
            w0 + 14.0 * s,
            20_000,
        );
        assert!((norm - 1.0).abs() < 1e-9, "{norm}");
    }

    #[test]
    fn balanced_splitter_is_lossless() {
        let b = BeamSplitterCoeffs::balanced();
        b.validate().unwrap();
        assert!((b.port_weight() - 0.25).abs() < 1e-15);
        let lossy = BeamSplitterCoeffs {
            transmission: Complex64::new(0.5, 0.0),
            ..b
        };
        assert!(lossy.validate().is_err());
    }

    #[test]
    fn chirp_difference_between_arms_is_negligible() {
        // the second arm lags by dphi_g / w0; its chirp must stay far below dphi_g
        let p = PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap();
        let f = fiber(18.0, 1e5);
        let dphi = 6.5e-5;
        let tau = temporal_width(&p, &f, C).unwrap().tau;
        let centre = f.length / f.group_velocity;
        for k in -30..=30 {
            let t = centre + 0.1 * k as f64 * tau;
            let d = chirp_phase(&p, &f, t).unwrap()
                - chirp_phase(&p, &f, t - dphi / p.carrier).unwrap();
            assert!(d.abs() < 1e-2 * dphi, "{d:e}");
        }
    }

    #[test]
    fn chirp_vanishes_at_centre_without_dispersion() {
        let p = PulseModel::from_bandwidth(1550e-9, 100e9, C).unwrap();
        let f = fiber(0.0, 1e3);
        let t = f.length / f.group_velocity;
        assert_eq!(chirp_phase(&p, &f, t).unwrap(), 0.0);
        let g = fiber(18.0, 1e3);
        let atan_only = -0.5 * (g.gvd * g.length / (2.0 * p.initial_width().powi(2))).atan();
        assert_eq!(chirp_phase(&p, &g, t).unwrap(), atan_only);
    }
}
