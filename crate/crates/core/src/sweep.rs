//! Inclination sweep: one row of phases, probabilities and budgets per
//! entry of the scenario's `theta_schedule`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::SwitchState;
use crate::earth_rotation::{rotation_phase, rotation_phase_oscillating, RotationPhase};
use crate::noise::{band_rms_phase, noise_margin};
use crate::scenario::ExperimentScenario;
use crate::{Error, Result};

/// One inclination. Integration times are `None` when the detector sees no
/// signal, i.e. at `theta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub dphi_g_12: f64,
    pub dphi_g_13: f64,
    pub dphi_c_linear: f64,
    pub dphi_c_oscillating: f64,
    pub dphi_c_secular: f64,
    pub dphi_c_total: f64,
    /// Closed oscillating form for `xi = n pi` and zero entry planes.
    pub dphi_c_aligned: Option<f64>,
    /// Rotation phase relative to the horizontal calibration.
    pub dphi_c_drift: f64,
    pub visibility_12: f64,
    pub visibility_13: f64,
    pub p_arm2_d1: f64,
    pub p_arm2_d2: f64,
    pub p_arm2_d3: f64,
    pub p_arm3_d1: f64,
    pub p_arm3_d2: f64,
    pub p_arm3_d3: f64,
    /// D1 with arm 3 open against its calibrated `A = 1/4`, s.
    pub t_int_d1: Option<f64>,
    /// Largest per-detector time over both switch states, s.
    pub t_int_max: Option<f64>,
    pub noise_rms: f64,
    pub noise_margin: f64,
    pub noise_margin_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub rows: Vec<SweepRow>,
}

fn with_theta<T>(theta: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Scenario(format!("theta = {theta} rad: {e}")))
}

fn rotation_at(s: &ExperimentScenario, theta: f64) -> Result<RotationPhase> {
    rotation_phase(
        &s.spool_at(0, theta),
        &s.kinematics[0],
        &s.spool_at(2, theta),
        &s.kinematics[2],
        s.fiber.wavelength,
        &s.constants,
    )
}

fn finite_time(t: f64) -> Option<f64> {
    t.is_finite().then_some(t)
}

/// Band rms of the phase noise around the switch frequency.
pub fn detection_band_rms(s: &ExperimentScenario) -> Result<f64> {
    let psd = s.psd()?;
    let f = s.switch.modulation_frequency;
    let half = 0.5 * s.noise.detection_bandwidth;
    band_rms_phase(&psd, f - half, f + half)
}

fn row(s: &ExperimentScenario, theta: f64, reference: f64, noise_rms: f64) -> Result<SweepRow> {
    let (p12, p13) = s.gravitational_phases(theta)?;
    let rot = rotation_at(s, theta)?;
    let s1 = s.spool_at(0, theta);
    let aligned = (s1.azimuth / std::f64::consts::PI).fract().abs() < 1e-12
        && s.spools[0].entry_plane == 0.0
        && s.spools[2].entry_plane == 0.0;
    let dphi_c_aligned = if aligned {
        Some(rotation_phase_oscillating(
            s.kinematics[0].optical_length(),
            s.kinematics[2].optical_length(),
            &s1,
            &s.kinematics[0],
            s.fiber.wavelength,
            &s.constants,
        )?)
    } else {
        None
    };
    let setup = s.counting_setup(theta)?;
    let pa = setup.probabilities(SwitchState::Arm2Open);
    let pb = setup.probabilities(SwitchState::Arm3Open);
    let times = setup.integration_times()?;
    let margin = noise_margin(p13, noise_rms, s.noise.margin_threshold)?;
    Ok(SweepRow {
        theta,
        dphi_g_12: p12,
        dphi_g_13: p13,
        dphi_c_linear: rot.linear,
        dphi_c_oscillating: rot.oscillating,
        dphi_c_secular: rot.secular,
        dphi_c_total: rot.total(),
        dphi_c_aligned,
        dphi_c_drift: rot.total() - reference,
        visibility_12: s.pair_visibility(1, p12)?,
        visibility_13: s.pair_visibility(2, p13)?,
        p_arm2_d1: pa[0],
        p_arm2_d2: pa[1],
        p_arm2_d3: pa[2],
        p_arm3_d1: pb[0],
        p_arm3_d2: pb[1],
        p_arm3_d3: pb[2],
        t_int_d1: finite_time(times[1][0]),
        t_int_max: finite_time(setup.max_integration_time()?),
        noise_rms,
        noise_margin: margin.ratio,
        noise_margin_pass: margin.passes,
    })
}

/// Evaluates every inclination in parallel; rows keep schedule order.
pub fn run_sweep(scenario: &ExperimentScenario) -> Result<SweepResult> {
    let reference = with_theta(0.0, rotation_at(scenario, 0.0))?.total();
    let noise_rms = detection_band_rms(scenario)?;
    let rows = scenario
        .theta_schedule
        .par_iter()
        .map(|&theta| with_theta(theta, row(scenario, theta, reference, noise_rms)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        scenario: scenario.name.clone(),
        rows,
    })
}
