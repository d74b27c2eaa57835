//! Detection probabilities under optical-switch modulation, Poisson-limited
//! integration time, seeded photon-count simulation and demodulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use crate::error::{ensure, finite, non_negative, positive, unit_interval};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// `N`, photons/s.
    pub rate: f64,
    /// Hz
    pub bandwidth: f64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        non_negative(self.rate, "source.rate")?;
        non_negative(self.bandwidth, "source.bandwidth")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// counts/s
    pub dark_rate: f64,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        unit_interval(self.efficiency, "detector.efficiency", true)?;
        non_negative(self.dark_rate, "detector.dark_rate")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationModel {
    /// dB/km
    pub fiber_alpha: f64,
    /// dB, summed over connectors, switch and splitters.
    pub component_losses: f64,
    /// m
    pub arm_length: f64,
}

/// `10^(-(alpha l + sum alpha_i) / 10)` with `alpha` in dB/km and `l` in km.
pub fn attenuation_factor(model: &AttenuationModel) -> Result<f64> {
    non_negative(model.fiber_alpha, "fiber_alpha")?;
    non_negative(model.component_losses, "component_losses")?;
    non_negative(model.arm_length, "arm_length")?;
    let db = model.fiber_alpha * model.arm_length * 1e-3 + model.component_losses;
    Ok(10f64.powf(-db / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchState {
    Arm2Open,
    Arm3Open,
}

impl SwitchState {
    pub fn as_str(self) -> &'static str {
        match self {
            SwitchState::Arm2Open => "arm2_open",
            SwitchState::Arm3Open => "arm3_open",
        }
    }
}

impl fmt::Display for SwitchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// D1 ends arm 2, D2 and D3 end arm 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
    D3,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::D1, Detector::D2, Detector::D3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Square-wave switch: arm 2 is open for the first `duty` of each period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    /// Hz
    pub modulation_frequency: f64,
    pub duty: f64,
    /// rad
    pub phase: f64,
}

impl SwitchSchedule {
    pub fn validate(&self) -> Result<()> {
        positive(self.modulation_frequency, "modulation_frequency")?;
        ensure(
            self.duty > 0.0 && self.duty < 1.0,
            "duty",
            format!("must lie in (0, 1), got {}", self.duty),
        )?;
        finite(self.phase, "phase")
    }

    pub fn period(&self) -> f64 {
        1.0 / self.modulation_frequency
    }

    pub fn state_at(&self, t: f64) -> SwitchState {
        let cycle = self.modulation_frequency * t + self.phase / TAU;
        if cycle - cycle.floor() < self.duty {
            SwitchState::Arm2Open
        } else {
            SwitchState::Arm3Open
        }
    }
}

/// `(p_D1, p_D2, p_D3)`.
pub type DetectorProbabilities = [f64; 3];

/// Detector probabilities with the interferometer held at quadrature.
///
/// The active pair (arms 1-2 or 1-3) has ports `P+- = (1 -+ V sin(dphi))/2`.
/// Routing: with arm 2 open, D1 takes `P+` and D2, D3 split `P-`; with arm 3
/// open, D1 takes `P+/2` and D2, D3 each take `P-/2 + P+/4`. At `dphi = 0`
/// this gives `(1/2, 1/4, 1/4)` and `(1/4, 3/8, 3/8)`, and the three always
/// sum to one.
///
/// `phase12` and `phase13` are the full gravitational phases, already
/// including the inclination.
pub fn arm_pair_probabilities(
    state: SwitchState,
    phase12: f64,
    phase13: f64,
    visibility: f64,
) -> Result<DetectorProbabilities> {
    unit_interval(visibility, "visibility", false)?;
    finite(phase12, "phase12")?;
    finite(phase13, "phase13")?;
    Ok(routed(state, phase12, phase13, visibility))
}

fn routed(state: SwitchState, phase12: f64, phase13: f64, v: f64) -> DetectorProbabilities {
    // cos(dphi + pi/2) = -sin(dphi)
    match state {
        SwitchState::Arm2Open => {
            let s = v * phase12.sin();
            [0.5 * (1.0 - s), 0.25 * (1.0 + s), 0.25 * (1.0 + s)]
        }
        SwitchState::Arm3Open => {
            let s = v * phase13.sin();
            [0.25 * (1.0 - s), 0.375 + 0.125 * s, 0.375 + 0.125 * s]
        }
    }
}

/// `t = (N a eta P + n_d) / (N a eta (A - P))^2`.
pub fn integration_time(
    p: f64,
    a_cal: f64,
    source: &SourceParams,
    detector: &DetectorParams,
    attenuation: f64,
) -> Result<f64> {
    source.validate()?;
    detector.validate()?;
    unit_interval(p, "P", false)?;
    unit_interval(a_cal, "A", false)?;
    unit_interval(attenuation, "attenuation", false)?;
    let gamma = source.rate * attenuation * detector.efficiency;
    let signal = gamma * (a_cal - p);
    if signal == 0.0 {
        return Err(Error::NoSignal(format!(
            "calibrated probability {a_cal} equals probability {p}"
        )));
    }
    Ok((gamma * p + detector.dark_rate) / (signal * signal))
}

/// Everything the counting layer needs at one inclination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingSetup {
    pub source: SourceParams,
    pub detector: DetectorParams,
    /// Transmission `a` of one arm.
    pub attenuation: f64,
    /// Scalar visibility from dispersion and polarization.
    pub visibility: f64,
    /// Residual rms of the stabilized operating point, rad.
    pub residual_noise_rms: f64,
    pub phase12: f64,
    pub phase13: f64,
    /// Height of arm 2 as a fraction of the 1-3 separation.
    pub arm2_fraction: f64,
    pub schedule: SwitchSchedule,
}

impl CountingSetup {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detector.validate()?;
        unit_interval(self.attenuation, "attenuation", false)?;
        unit_interval(self.visibility, "visibility", false)?;
        non_negative(self.residual_noise_rms, "residual_noise_rms")?;
        finite(self.phase12, "phase12")?;
        finite(self.phase13, "phase13")?;
        unit_interval(self.arm2_fraction, "arm2_fraction", false)?;
        self.schedule.validate()
    }

    /// Visibility after averaging a Gaussian residual phase of the given rms.
    pub fn effective_visibility(&self) -> f64 {
        let s = self.residual_noise_rms;
        self.visibility * (-0.5 * s * s).exp()
    }

    /// Detected photon rate `N a eta`.
    pub fn detected_rate(&self) -> f64 {
        self.source.rate * self.attenuation * self.detector.efficiency
    }

    pub fn probabilities(&self, state: SwitchState) -> DetectorProbabilities {
        routed(
            state,
            self.phase12,
            self.phase13,
            self.effective_visibility(),
        )
    }

    /// Calibrated (horizontal) probabilities.
    pub fn baseline(&self, state: SwitchState) -> DetectorProbabilities {
        routed(state, 0.0, 0.0, self.effective_visibility())
    }

    /// Integration time for every detector in both switch states, indexed
    /// `[state][detector]`, with `arm2_open` first. A detector without signal
    /// reports infinity.
    pub fn integration_times(&self) -> Result<[[f64; 3]; 2]> {
        let mut out = [[f64::INFINITY; 3]; 2];
        for (i, state) in [SwitchState::Arm2Open, SwitchState::Arm3Open]
            .into_iter()
            .enumerate()
        {
            let p = self.probabilities(state);
            let a = self.baseline(state);
            for d in 0..3 {
                out[i][d] = match integration_time(
                    p[d],
                    a[d],
                    &self.source,
                    &self.detector,
                    self.attenuation,
                ) {
                    Ok(t) => t,
                    Err(Error::NoSignal(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
            }
        }
        Ok(out)
    }

    /// Time after which every detector has resolved the signal.
    pub fn max_integration_time(&self) -> Result<f64> {
        Ok(self
            .integration_times()?
            .iter()
            .flatten()
            .fold(0.0, |m: f64, &t| m.max(t)))
    }

    pub fn demod_model(&self, bin_width: f64) -> DemodModel {
        DemodModel {
            visibility: self.effective_visibility(),
            arm2_fraction: self.arm2_fraction,
            dark_rate: self.detector.dark_rate,
            bin_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub bin_index: u64,
    pub detector: Detector,
    pub switch_state: SwitchState,
    pub counts: u64,
}

const CHUNK_BINS: u64 = 4096;

fn check_binning(schedule: &SwitchSchedule, duration: f64, bin_width: f64) -> Result<u64> {
    positive(duration, "duration")?;
    positive(bin_width, "bin_width")?;
    let period = schedule.period();
    let ratio = period / bin_width;
    let aligned = (ratio - ratio.round()).abs() <= 1e-9 * ratio && ratio.round() >= 1.0;
    ensure(
        aligned || ratio >= 100.0,
        "bin_width",
        format!("must divide the switch period {period:e} s or be at most 1/100 of it"),
    )?;
    let bins = (duration / bin_width).floor();
    ensure(bins >= 1.0, "duration", "shorter than one bin")?;
    Ok(bins as u64)
}

/// Default bin width: half the switch period.
pub fn default_bin_width(schedule: &SwitchSchedule) -> f64 {
    0.5 * schedule.period()
}

/// Poisson counts per bin and detector with mean
/// `(N a eta p_det + n_d) bin_width`. The switch state of a bin is taken at
/// its centre.
///
/// Bins are processed in chunks; chunk `k` draws from ChaCha stream `k` of
/// `seed`, so the output does not depend on the thread schedule.
pub fn simulate_counts(
    setup: &CountingSetup,
    duration: f64,
    bin_width: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    setup.validate()?;
    let bins = check_binning(&setup.schedule, duration, bin_width)?;
    let chunks = bins.div_ceil(CHUNK_BINS);
    let gamma = setup.detected_rate();
    let dark = setup.detector.dark_rate;
    let noise = (setup.residual_noise_rms > 0.0)
        .then(|| Normal::new(0.0, setup.residual_noise_rms).expect("finite rms"));
    let fixed = [
        setup.probabilities(SwitchState::Arm2Open),
        setup.probabilities(SwitchState::Arm3Open),
    ];

    let out: Vec<Vec<CountRecord>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let start = chunk * CHUNK_BINS;
            let end = (start + CHUNK_BINS).min(bins);
            let mut recs = Vec::with_capacity(3 * (end - start) as usize);
            for bin in start..end {
                let t = (bin as f64 + 0.5) * bin_width;
                let state = setup.schedule.state_at(t);
                let p = match &noise {
                    Some(n) => {
                        let jitter = n.sample(&mut rng);
                        routed(
                            state,
                            setup.phase12 + jitter,
                            setup.phase13 + jitter,
                            setup.visibility,
                        )
                    }
                    None => fixed[(state == SwitchState::Arm3Open) as usize],
                };
                for d in Detector::ALL {
                    let mean = (gamma * p[d.index()] + dark) * bin_width;
                    recs.push(CountRecord {
                        bin_index: bin,
                        detector: d,
                        switch_state: state,
                        counts: draw_poisson(&mut rng, mean),
                    });
                }
            }
            recs
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

fn draw_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

/// Writes `bin_index,detector,switch_state,counts`.
pub fn write_counts_csv<W: std::io::Write>(records: &[CountRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_index", "detector", "switch_state", "counts"])?;
    for r in records {
        w.write_record([
            r.bin_index.to_string(),
            r.detector.to_string(),
            r.switch_state.to_string(),
            r.counts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_counts_csv(records: &[CountRecord], path: impl AsRef<Path>) -> Result<()> {
    write_counts_csv(records, std::fs::File::create(path)?)
}

/// Inputs the estimator needs besides the counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodModel {
    pub visibility: f64,
    pub arm2_fraction: f64,
    pub dark_rate: f64,
    pub bin_width: f64,
}

/// Summed counts per switch state and detector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountTotals {
    /// `[state][detector]`, `arm2_open` first.
    pub counts: [[f64; 3]; 2],
    /// Bins per state.
    pub bins: [f64; 2],
    /// Switch periods covered.
    pub periods: f64,
}

impl CountTotals {
    pub fn from_records(
        records: &[CountRecord],
        schedule: &SwitchSchedule,
        bin_width: f64,
    ) -> Self {
        let mut t = CountTotals::default();
        let mut last = 0;
        for r in records {
            let s = (r.switch_state == SwitchState::Arm3Open) as usize;
            t.counts[s][r.detector.index()] += r.counts as f64;
            if r.detector == Detector::D1 {
                t.bins[s] += 1.0;
            }
            last = last.max(r.bin_index + 1);
        }
        t.periods = last as f64 * bin_width * schedule.modulation_frequency;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    /// Estimate of the 1-3 gravitational phase.
    pub phase: f64,
    pub sigma: f64,
    /// From the arm 1-2 pair, rescaled by `1 / arm2_fraction`.
    pub from_arm2: f64,
    pub sigma_arm2: f64,
    pub from_arm3: f64,
    pub sigma_arm3: f64,
}

/// Phase estimate from records spanning at least 100 switch periods.
pub fn demodulate(
    records: &[CountRecord],
    schedule: &SwitchSchedule,
    model: &DemodModel,
) -> Result<PhaseEstimate> {
    schedule.validate()?;
    demodulate_totals(
        &CountTotals::from_records(records, schedule, model.bin_width),
        model,
    )
}

/// Estimator on summed counts (which may be analytic means).
///
/// In each state the dark-subtracted D1 share `q` of the counts is inverted
/// at quadrature: `sin(dphi12) = (1 - 2q) / V` with arm 2 open and
/// `sin(dphi13) = (1 - 4q) / V` with arm 3 open, linearized in `dphi`.
/// Errors are propagated from Poisson variances of the raw counts and the
/// two states are combined by inverse variance.
pub fn demodulate_totals(totals: &CountTotals, model: &DemodModel) -> Result<PhaseEstimate> {
    unit_interval(model.visibility, "visibility", true)?;
    unit_interval(model.arm2_fraction, "arm2_fraction", false)?;
    non_negative(model.dark_rate, "dark_rate")?;
    positive(model.bin_width, "bin_width")?;
    if totals.periods < 100.0 {
        return Err(Error::InsufficientData(format!(
            "records span {:.1} switch periods, need 100",
            totals.periods
        )));
    }
    let v = model.visibility;
    let share = |s: usize| -> Result<(f64, f64)> {
        let dark = model.dark_rate * model.bin_width * totals.bins[s];
        let c = totals.counts[s];
        let x = c[0] - dark;
        let y = c[1] + c[2] - 2.0 * dark;
        let n = x + y;
        if totals.bins[s] == 0.0 || n <= 0.0 {
            return Err(Error::InsufficientData(format!(
                "no signal counts in switch state {}",
                if s == 0 { "arm2_open" } else { "arm3_open" }
            )));
        }
        let var = (y * y * c[0] + x * x * (c[1] + c[2])) / (n * n * n * n);
        Ok((x / n, var.sqrt()))
    };
    let (q3, sq3) = share(1)?;
    let from_arm3 = (1.0 - 4.0 * q3) / v;
    let sigma_arm3 = 4.0 * sq3 / v;
    let (from_arm2, sigma_arm2) = if model.arm2_fraction > 0.0 {
        let (q2, sq2) = share(0)?;
        let r = model.arm2_fraction;
        ((1.0 - 2.0 * q2) / (v * r), 2.0 * sq2 / (v * r))
    } else {
        (0.0, f64::INFINITY)
    };
    let w3 = 1.0 / (sigma_arm3 * sigma_arm3);
    let w2 = if sigma_arm2.is_finite() {
        1.0 / (sigma_arm2 * sigma_arm2)
    } else {
        0.0
    };
    let (phase, sigma) = if (w2 + w3).is_finite() {
        (
            (w3 * from_arm3 + w2 * from_arm2) / (w2 + w3),
            (w2 + w3).sqrt().recip(),
        )
    } else {
        // a zero variance only arises from noiseless input; average then
        (0.5 * (from_arm3 + from_arm2), 0.0)
    };
    Ok(PhaseEstimate {
        phase,
        sigma,
        from_arm2,
        sigma_arm2,
        from_arm3,
        sigma_arm3,
    })
}

/// Expected totals for the given duration, for bias checks.
pub fn expected_totals(
    setup: &CountingSetup,
    duration: f64,
    bin_width: f64,
) -> Result<CountTotals> {
    setup.validate()?;
    let bins = check_binning(&setup.schedule, duration, bin_width)?;
    let mut t = CountTotals::default();
    for bin in 0..bins {
        let state = setup.schedule.state_at((bin as f64 + 0.5) * bin_width);
        let s = (state == SwitchState::Arm3Open) as usize;
        t.bins[s] += 1.0;
    }
    for s in 0..2 {
        let state = if s == 0 {
            SwitchState::Arm2Open
        } else {
            SwitchState::Arm3Open
        };
        let p = setup.probabilities(state);
        let bins_s = t.bins[s];
        for (c, pd) in t.counts[s].iter_mut().zip(p) {
            *c = (setup.detected_rate() * pd + setup.detector.dark_rate) * bin_width * bins_s;
        }
    }
    t.periods = bins as f64 * bin_width * setup.schedule.modulation_frequency;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_and_ten_db() {
        let m = AttenuationModel {
            fiber_alpha: 0.0,
            component_losses: 0.0,
            arm_length: 1e5,
        };
        assert_eq!(attenuation_factor(&m).unwrap(), 1.0);
        let m = AttenuationModel {
            component_losses: 10.0,
            ..m
        };
        assert!((attenuation_factor(&m).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn telecom_attenuation() {
        let m = AttenuationModel {
            fiber_alpha: 0.17,
            component_losses: 0.5,
            arm_length: 1e5,
        };
        assert!((attenuation_factor(&m).unwrap() - 10f64.powf(-1.75)).abs() < 1e-15);
    }

    #[test]
    fn calibration_baselines() {
        assert_eq!(
            arm_pair_probabilities(SwitchState::Arm2Open, 0.0, 0.0, 1.0).unwrap(),
            [0.5, 0.25, 0.25]
        );
        assert_eq!(
            arm_pair_probabilities(SwitchState::Arm3Open, 0.0, 0.0, 1.0).unwrap(),
            [0.25, 0.375, 0.375]
        );
    }

    #[test]
    fn shifted_by_base_times_sine() {
        let d = 1e-4;
        let p = arm_pair_probabilities(SwitchState::Arm3Open, 0.5 * d, d, 0.9).unwrap();
        assert!((p[0] - 0.25 * (1.0 - 0.9 * d.sin())).abs() < 1e-16);
        let (pp, _) = crate::phase::detection_probabilities(d, std::f64::consts::FRAC_PI_2, 0.9);
        assert!((2.0 * p[0] - pp).abs() < 1e-15);
    }

    #[test]
    fn no_signal_without_phase() {
        let src = SourceParams {
            rate: 1e6,
            bandwidth: 1e11,
        };
        let det = DetectorParams {
            efficiency: 0.9,
            dark_rate: 1.0,
        };
        assert!(matches!(
            integration_time(0.25, 0.25, &src, &det, 0.1),
            Err(Error::NoSignal(_))
        ));
    }

    #[test]
    fn schedule_square_wave() {
        let s = SwitchSchedule {
            modulation_frequency: 2.0,
            duty: 0.5,
            phase: 0.0,
        };
        assert_eq!(s.state_at(0.1), SwitchState::Arm2Open);
        assert_eq!(s.state_at(0.3), SwitchState::Arm3Open);
        assert_eq!(s.state_at(0.6), SwitchState::Arm2Open);
    }
}
