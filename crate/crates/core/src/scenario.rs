//! Experiment description loaded from TOML.
//!
//! Every dimensional value is written with a unit suffix and converted to SI
//! on load; any field left out takes the baseline value. The interferometer
//! inclination is not part of the file: it is swept over `theta_schedule`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use crate::counting::{
    attenuation_factor, AttenuationModel, CountingSetup, DetectorParams, SourceParams,
    SwitchSchedule,
};
use crate::dispersion::{dispersion_visibility, temporal_width, FiberDispersion, PulseModel};
use crate::earth_rotation::{PhotonKinematics, SpoolGeometry};
use crate::error::{ensure, non_negative, positive, unit_interval};
use crate::noise::{default_psd, PhaseNoisePsd, ThermalNoiseParams};
use crate::phase::{gravitational_phase, FiberOptical, InterferometerGeometry, PhysicalConstants};
use crate::units::{
    Acceleration, Action, Angle, AngularRate, Attenuation, Dispersion, Frequency, Length, Loss,
    PhaseNoise, Quantity, Rate, Speed,
};
use crate::{Error, Result};

/// Directory searched for scenario names that are not paths.
pub const SCENARIO_DIR_ENV: &str = "GRAVMZI_SCENARIO_DIR";

const BASELINE: &str = include_str!("../scenarios/baseline.toml");

/// How the spool axes move when the interferometer is tilted by `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpoolAxis {
    /// Axes stay normal to the interferometer plane: elevation `pi/2 - theta`.
    #[default]
    FollowsPlane,
    /// Axes held vertical by a gimbal.
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    /// Width of the detection band centred on the switch frequency, Hz.
    pub detection_bandwidth: f64,
    pub margin_threshold: f64,
    /// Measured `freq_hz,amp_rad_per_sqrthz` table replacing the parametric
    /// spectrum. Relative paths resolve against the scenario file.
    pub psd_table: Option<PathBuf>,
}

/// A fully validated experiment, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentScenario {
    pub name: String,
    /// Inclination is held at `pi/2`; see [`Self::geometry_at`].
    pub geometry: InterferometerGeometry,
    /// Height of arm 2 as a fraction of `h`.
    pub arm2_fraction: f64,
    pub fiber: FiberOptical,
    /// Arms 1, 2, 3, with the axis elevation of the vertical interferometer.
    pub spools: [SpoolGeometry; 3],
    pub spool_axis: SpoolAxis,
    /// Arms 1, 2, 3. Arm 1 carries the optical mismatch.
    pub kinematics: [PhotonKinematics; 3],
    pub pulse: PulseModel,
    pub dispersion: [FiberDispersion; 3],
    pub thermal: ThermalNoiseParams,
    pub noise: NoiseSettings,
    pub source: SourceParams,
    pub detectors: DetectorParams,
    pub attenuation: AttenuationModel,
    pub switch: SwitchSchedule,
    pub constants: PhysicalConstants,
    pub polarization_visibility: f64,
    pub theta_schedule: Vec<f64>,
    pub residual_noise_rms: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    theta_schedule: Option<Vec<Quantity<Angle>>>,
    residual_noise_rms: Option<Quantity<Angle>>,
    polarization_visibility: Option<f64>,
    geometry: RawGeometry,
    fiber: RawFiber,
    spools: RawSpools,
    kinematics: RawKinematics,
    source: RawSource,
    dispersion: RawDispersion,
    detectors: RawDetectors,
    attenuation: RawAttenuation,
    switch: RawSwitch,
    noise: RawNoise,
    thermal: RawThermal,
    constants: RawConstants,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawGeometry {
    arm_length: Option<Quantity<Length>>,
    separation: Option<Quantity<Length>>,
    arm2_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawFiber {
    group_index: Option<f64>,
    wavelength: Option<Quantity<Length>>,
    attenuation: Option<Quantity<Attenuation>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSpools {
    radius: Option<Quantity<Length>>,
    axial_offset: Option<Quantity<Length>>,
    azimuth: Option<Quantity<Angle>>,
    latitude: Option<Quantity<Angle>>,
    initial_earth_angle: Option<Quantity<Angle>>,
    entry_planes: Option<[Quantity<Angle>; 3]>,
    axis: Option<SpoolAxis>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawKinematics {
    angular_speed: Option<Quantity<AngularRate>>,
    /// Alternative to `angular_speed` and `axial_speed`: axial advance per
    /// turn of a helix traversed at `c / N`.
    winding_pitch: Option<Quantity<Length>>,
    axial_speed: Option<Quantity<Speed>>,
    optical_mismatch: Option<Quantity<Length>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSource {
    rate: Option<Quantity<Rate>>,
    bandwidth: Option<Quantity<Frequency>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawDispersion {
    coefficients: Option<[Quantity<Dispersion>; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawDetectors {
    efficiency: Option<f64>,
    dark_rate: Option<Quantity<Rate>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawAttenuation {
    component_losses: Option<Quantity<Loss>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSwitch {
    modulation_frequency: Option<Quantity<Frequency>>,
    duty: Option<f64>,
    phase: Option<Quantity<Angle>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawNoise {
    detection_bandwidth: Option<Quantity<Frequency>>,
    margin_threshold: Option<f64>,
    psd_table: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawThermal {
    thermal_conductivity: Option<f64>,
    dn_dt: Option<f64>,
    expansion: Option<f64>,
    diffusivity: Option<f64>,
    mode_field_radius: Option<Quantity<Length>>,
    cladding_radius: Option<Quantity<Length>>,
    plateau_amplitude: Option<Quantity<PhaseNoise>>,
    reference_length: Option<Quantity<Length>>,
    flicker_corner: Option<Quantity<Frequency>>,
    rolloff_corner: Option<Quantity<Frequency>>,
    rolloff_slope: Option<f64>,
    min_frequency: Option<Quantity<Frequency>>,
    max_frequency: Option<Quantity<Frequency>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConstants {
    c: Option<Quantity<Speed>>,
    g: Option<Quantity<Acceleration>>,
    planck: Option<Quantity<Action>>,
    earth_radius: Option<Quantity<Length>>,
    earth_angular_speed: Option<Quantity<AngularRate>>,
}

fn or<D>(q: Option<Quantity<D>>, default: f64) -> f64 {
    q.map_or(default, |q| q.value)
}

impl RawScenario {
    fn resolve(self, base_dir: Option<&Path>) -> Result<ExperimentScenario> {
        let d = PhysicalConstants::default();
        let k = &self.constants;
        let constants = PhysicalConstants {
            c: or(k.c, d.c),
            g: or(k.g, d.g),
            planck: or(k.planck, d.planck),
            earth_radius: or(k.earth_radius, d.earth_radius),
            earth_angular_speed: or(k.earth_angular_speed, d.earth_angular_speed),
        };
        constants.validate()?;
        let c = constants.c;

        let g = &self.geometry;
        let geometry =
            InterferometerGeometry::new(or(g.arm_length, 1e5), or(g.separation, 1.0), FRAC_PI_2)?;
        let arm2_fraction = g.arm2_fraction.unwrap_or(0.5);
        ensure(
            arm2_fraction > 0.0 && arm2_fraction < 1.0,
            "geometry.arm2_fraction",
            format!("must lie in (0, 1), got {arm2_fraction}"),
        )?;

        let f = &self.fiber;
        let fiber = FiberOptical {
            group_index: f.group_index.unwrap_or(1.468),
            wavelength: or(f.wavelength, 1550e-9),
            attenuation: or(f.attenuation, 0.17),
        };
        fiber.validate()?;

        let s = &self.spools;
        let axis = s.axis.unwrap_or_default();
        let entry = s.entry_planes.map_or([0.0; 3], |e| e.map(|q| q.value));
        let base_spool = SpoolGeometry {
            radius: or(s.radius, 0.2),
            axial_offset: or(s.axial_offset, 0.0),
            inclination: spool_elevation(axis, FRAC_PI_2),
            azimuth: or(s.azimuth, 0.0),
            latitude: or(s.latitude, 48.21f64.to_radians()),
            initial_earth_angle: or(s.initial_earth_angle, 0.0),
            entry_plane: 0.0,
        };
        let spools = entry.map(|a| SpoolGeometry {
            entry_plane: a,
            ..base_spool
        });
        for sp in &spools {
            sp.validate()?;
        }
        ensure(base_spool.radius > 0.0, "spools.radius", "must be positive")?;

        let kn = &self.kinematics;
        let mismatch = or(kn.optical_mismatch, 0.0);
        let (angular_speed, axial_speed) = match (kn.winding_pitch, kn.angular_speed) {
            (Some(_), Some(_)) => {
                return Err(Error::Scenario(
                    "kinematics: give either winding_pitch or angular_speed, not both".into(),
                ))
            }
            (Some(p), None) => {
                let k = PhotonKinematics::from_winding(
                    base_spool.radius,
                    p.value,
                    geometry.arm_length,
                    fiber.group_index,
                    c,
                )?;
                (k.angular_speed, k.axial_speed)
            }
            (None, w) => (or(w, 1e9), or(kn.axial_speed, 400.0)),
        };
        let arm = |extra: f64| -> Result<PhotonKinematics> {
            let fiber_length = geometry.arm_length + extra / fiber.group_index;
            positive(fiber_length, "kinematics.optical_mismatch")?;
            let k = PhotonKinematics {
                angular_speed,
                axial_speed,
                fiber_length,
                group_index: fiber.group_index,
            };
            k.validate()?;
            Ok(k)
        };
        let kinematics = [arm(mismatch)?, arm(0.0)?, arm(0.0)?];
        let b2 = crate::earth_rotation::beta0_sq(&base_spool, &kinematics[0], c);
        ensure(
            b2 < 1.0,
            "kinematics.angular_speed",
            format!("photon speed reaches c (beta0^2 = {b2})"),
        )?;

        let src = &self.source;
        let source = SourceParams {
            rate: or(src.rate, 1e6),
            bandwidth: or(src.bandwidth, 100e9),
        };
        source.validate()?;
        let pulse = PulseModel::from_bandwidth(fiber.wavelength, source.bandwidth, c)?;
        let dlambda = pulse.wavelength_width(c);
        let coeffs = self
            .dispersion
            .coefficients
            .map_or([18.0; 3], |q| q.map(|q| q.value));
        let mut dispersion = Vec::with_capacity(3);
        for (i, d) in coeffs.into_iter().enumerate() {
            dispersion.push(FiberDispersion::from_coefficient(
                d,
                fiber.wavelength,
                kinematics[i].fiber_length,
                fiber.group_index,
                dlambda,
                c,
            )?);
        }
        let dispersion: [FiberDispersion; 3] = dispersion.try_into().expect("three arms");

        let td = ThermalNoiseParams::default();
        let t = &self.thermal;
        let thermal = ThermalNoiseParams {
            thermal_conductivity: t.thermal_conductivity.unwrap_or(td.thermal_conductivity),
            dn_dt: t.dn_dt.unwrap_or(td.dn_dt),
            group_index: fiber.group_index,
            expansion: t.expansion.unwrap_or(td.expansion),
            diffusivity: t.diffusivity.unwrap_or(td.diffusivity),
            mode_field_radius: or(t.mode_field_radius, td.mode_field_radius),
            cladding_radius: or(t.cladding_radius, td.cladding_radius),
            wavelength: fiber.wavelength,
            plateau_amplitude: or(t.plateau_amplitude, td.plateau_amplitude),
            reference_length: or(t.reference_length, td.reference_length),
            flicker_corner: or(t.flicker_corner, td.flicker_corner),
            rolloff_corner: or(t.rolloff_corner, td.rolloff_corner),
            rolloff_slope: t.rolloff_slope.unwrap_or(td.rolloff_slope),
            min_frequency: or(t.min_frequency, td.min_frequency),
            max_frequency: or(t.max_frequency, td.max_frequency),
        };
        thermal.validate()?;

        let n = &self.noise;
        let noise = NoiseSettings {
            detection_bandwidth: or(n.detection_bandwidth, 1e3),
            margin_threshold: n.margin_threshold.unwrap_or(10.0),
            psd_table: n.psd_table.clone().map(|p| match base_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }),
        };
        positive(noise.detection_bandwidth, "noise.detection_bandwidth")?;
        positive(noise.margin_threshold, "noise.margin_threshold")?;

        let dt = &self.detectors;
        let detectors = DetectorParams {
            efficiency: dt.efficiency.unwrap_or(0.9),
            dark_rate: or(dt.dark_rate, 1.0),
        };
        detectors.validate()?;

        let attenuation = AttenuationModel {
            fiber_alpha: fiber.attenuation,
            component_losses: or(self.attenuation.component_losses, 0.5),
            arm_length: geometry.arm_length,
        };
        attenuation_factor(&attenuation)?;

        let sw = &self.switch;
        let switch = SwitchSchedule {
            modulation_frequency: or(sw.modulation_frequency, 1e6),
            duty: sw.duty.unwrap_or(0.5),
            phase: or(sw.phase, 0.0),
        };
        switch.validate()?;
        ensure(
            switch.modulation_frequency > 0.5 * noise.detection_bandwidth,
            "switch.modulation_frequency",
            "detection band would extend below 0 Hz",
        )?;

        let polarization_visibility = self.polarization_visibility.unwrap_or(1.0);
        unit_interval(polarization_visibility, "polarization_visibility", true)?;
        let residual_noise_rms = or(self.residual_noise_rms, 0.0);
        non_negative(residual_noise_rms, "residual_noise_rms")?;

        let theta_schedule: Vec<f64> = self.theta_schedule.map_or_else(
            || {
                (0..=6)
                    .map(|i| (15.0 * f64::from(i)).to_radians())
                    .collect()
            },
            |v| v.into_iter().map(|q| q.value).collect(),
        );
        for (i, &th) in theta_schedule.iter().enumerate() {
            ensure(
                (0.0..=FRAC_PI_2 + 1e-12).contains(&th),
                "theta_schedule",
                format!("entry {i} = {th} rad lies outside [0, pi/2]"),
            )?;
        }

        Ok(ExperimentScenario {
            name: self.name.unwrap_or_else(|| "unnamed".into()),
            geometry,
            arm2_fraction,
            fiber,
            spools,
            spool_axis: axis,
            kinematics,
            pulse,
            dispersion,
            thermal,
            noise,
            source,
            detectors,
            attenuation,
            switch,
            constants,
            polarization_visibility,
            theta_schedule,
            residual_noise_rms,
        })
    }
}

fn spool_elevation(axis: SpoolAxis, theta: f64) -> f64 {
    match axis {
        SpoolAxis::FollowsPlane => FRAC_PI_2 - theta,
        SpoolAxis::Vertical => FRAC_PI_2,
    }
}

impl ExperimentScenario {
    /// Parses and validates TOML. Relative table paths resolve against
    /// `base_dir` when given.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        raw.resolve(base_dir)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent())
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    /// The bundled baseline.
    pub fn baseline() -> Self {
        Self::from_toml_str(BASELINE, None).expect("bundled baseline is valid")
    }

    /// Resolves `spec` as a file path, then as `<name>.toml` inside
    /// `$GRAVMZI_SCENARIO_DIR`, then as a bundled name.
    pub fn resolve(spec: &str) -> Result<Self> {
        let direct = Path::new(spec);
        if direct.is_file() {
            return Self::load(direct);
        }
        if let Some(dir) = std::env::var_os(SCENARIO_DIR_ENV) {
            let dir = PathBuf::from(dir);
            for candidate in [dir.join(spec), dir.join(format!("{spec}.toml"))] {
                if candidate.is_file() {
                    return Self::load(candidate);
                }
            }
        }
        match spec {
            "baseline" => Ok(Self::baseline()),
            _ => Err(Error::Scenario(format!(
                "no scenario file or bundled scenario named `{spec}`"
            ))),
        }
    }

    pub fn geometry_at(&self, theta: f64) -> InterferometerGeometry {
        self.geometry.with_inclination(theta)
    }

    /// Spool of arm `arm` (0, 1, 2) with the interferometer tilted by `theta`.
    pub fn spool_at(&self, arm: usize, theta: f64) -> SpoolGeometry {
        SpoolGeometry {
            inclination: spool_elevation(self.spool_axis, theta),
            ..self.spools[arm]
        }
    }

    /// Gravitational phases `(phase12, phase13)` at `theta`.
    pub fn gravitational_phases(&self, theta: f64) -> Result<(f64, f64)> {
        let g = self.geometry_at(theta);
        let p13 = gravitational_phase(&g, &self.fiber, &self.constants)?;
        let g12 = InterferometerGeometry {
            separation: self.arm2_fraction * g.separation,
            ..g
        };
        let p12 = gravitational_phase(&g12, &self.fiber, &self.constants)?;
        Ok((p12, p13))
    }

    /// Visibility of the pair of arm 1 with `arm` (1 or 2): dispersive
    /// mismatch and group delay, times the polarization overlap.
    pub fn pair_visibility(&self, arm: usize, phase: f64) -> Result<f64> {
        let c = self.constants.c;
        let t1 = temporal_width(&self.pulse, &self.dispersion[0], c)?;
        let tk = temporal_width(&self.pulse, &self.dispersion[arm], c)?;
        let delay = (self.kinematics[0].optical_length() - self.kinematics[arm].optical_length())
            / c
            + phase / self.pulse.carrier;
        Ok(dispersion_visibility(t1.tau, tk.tau, delay)? * self.polarization_visibility)
    }

    pub fn transmission(&self) -> Result<f64> {
        attenuation_factor(&self.attenuation)
    }

    /// Counting inputs at `theta`. The scalar visibility is the lower of
    /// the two pair visibilities.
    pub fn counting_setup(&self, theta: f64) -> Result<CountingSetup> {
        let (phase12, phase13) = self.gravitational_phases(theta)?;
        let v = self
            .pair_visibility(1, phase12)?
            .min(self.pair_visibility(2, phase13)?);
        let setup = CountingSetup {
            source: self.source,
            detector: self.detectors,
            attenuation: self.transmission()?,
            visibility: v,
            residual_noise_rms: self.residual_noise_rms,
            phase12,
            phase13,
            arm2_fraction: self.arm2_fraction,
            schedule: self.switch,
        };
        setup.validate()?;
        Ok(setup)
    }

    /// Measured table if configured, otherwise the parametric spectrum for
    /// the two active arms.
    pub fn psd(&self) -> Result<PhaseNoisePsd> {
        match &self.noise.psd_table {
            Some(path) => PhaseNoisePsd::load_csv(path),
            None => default_psd(&self.thermal, 2.0 * self.geometry.arm_length),
        }
    }
}
