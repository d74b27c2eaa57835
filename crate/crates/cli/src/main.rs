use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gravmzi::counting::{default_bin_width, demodulate, simulate_counts};
use gravmzi::dispersion::{dispersive_detection_probability, temporal_width};
use gravmzi::earth_rotation::{
    default_steps, linear_path_bound, oscillation_period_arc, oscillation_period_optical,
    proper_time_closed, proper_time_numeric, required_alignment, rotation_prefactor,
};
use gravmzi::emit::{self, Format};
use gravmzi::noise::{band_rms_phase, choose_modulation_frequency};
use gravmzi::phase::detection_probabilities;
use gravmzi::scenario::ExperimentScenario;
use gravmzi::sweep::run_sweep;
use gravmzi::units::{self, Angle, Frequency, Time};
use gravmzi::Error;

/// Bins above which a Monte Carlo run is refused.
const MAX_BINS: f64 = 5e7;

#[derive(Parser)]
#[command(
    name = "gravmzi",
    version,
    about = "Phase, noise and counting model of a rotatable three-arm fiber interferometer"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, a name in $GRAVMZI_SCENARIO_DIR, or a bundled name.
    #[arg(long, global = true, default_value = "baseline")]
    scenario: String,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma-separated inclinations with units, e.g. `0deg,45deg,90deg`;
    /// replaces the scenario schedule.
    #[arg(long, global = true, value_parser = parse_thetas)]
    theta: Option<Thetas>,
    /// Monte Carlo duration with units, e.g. `4 days`.
    #[arg(long, global = true, value_parser = parse_time)]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Gravitational phase and quadrature probabilities per inclination.
    Phase,
    /// Earth-rotation phase and proper times per inclination.
    EarthRotation {
        /// Also integrate the proper time numerically.
        #[arg(long)]
        numeric: bool,
    },
    /// Pulse broadening and dispersive visibility per inclination.
    Dispersion,
    /// Tabulated phase-noise spectrum; band summary on stderr.
    Noise {
        #[arg(long, default_value = "1 Hz", value_parser = parse_freq)]
        f_lo: f64,
        #[arg(long, default_value = "1 MHz", value_parser = parse_freq)]
        f_hi: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Poisson-limited integration time per detector and inclination.
    IntegrationTime,
    /// Simulated counts at one inclination and their demodulated phase.
    Montecarlo {
        /// Replaces the scenario switch frequency.
        #[arg(long, value_parser = parse_freq)]
        switch_frequency: Option<f64>,
        /// Defaults to half the switch period.
        #[arg(long, value_parser = parse_time)]
        bin_width: Option<f64>,
        /// Also write the count records here, in `--format`.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Full inclination sweep.
    Sweep,
    /// Exit-plane alignment and path-length tolerances.
    Tolerances,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parsed `--theta` list, kept as one clap value.
#[derive(Clone, Debug)]
struct Thetas(Vec<f64>);

fn parse_thetas(s: &str) -> std::result::Result<Thetas, String> {
    s.split(',')
        .map(|t| {
            let v = units::parse::<Angle>(t).map_err(|e| e.to_string())?;
            if (0.0..=FRAC_PI_2 + 1e-12).contains(&v) {
                Ok(v)
            } else {
                Err(format!(
                    "inclination `{}` lies outside [0, 90 deg]",
                    t.trim()
                ))
            }
        })
        .collect::<std::result::Result<_, _>>()
        .map(Thetas)
}

fn parse_time(s: &str) -> std::result::Result<f64, String> {
    units::parse::<Time>(s).map_err(|e| e.to_string())
}

fn parse_freq(s: &str) -> std::result::Result<f64, String> {
    units::parse::<Frequency>(s).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PhaseRow {
    theta: f64,
    dphi_g_12: f64,
    dphi_g_13: f64,
    p_plus: f64,
    p_minus: f64,
}

#[derive(Serialize)]
struct RotationRow {
    theta: f64,
    prefactor: f64,
    linear: f64,
    oscillating: f64,
    secular: f64,
    total: f64,
    tau1_deviation_closed: f64,
    tau3_deviation_closed: f64,
    tau1_deviation_numeric: Option<f64>,
    tau3_deviation_numeric: Option<f64>,
    numeric_error_estimate: Option<f64>,
}

#[derive(Serialize)]
struct DispersionRow {
    theta: f64,
    tau0: f64,
    tau_arm1: f64,
    tau_arm3: f64,
    broadening: f64,
    broadening_standard: f64,
    visibility_13: f64,
    /// `|P(dispersive) - P(ideal)|` at quadrature.
    probability_deviation: f64,
    /// `|P(dphi) - P(0)|` at quadrature.
    gravitational_shift: f64,
}

#[derive(Serialize)]
struct TimeRow {
    theta: f64,
    arm2_d1: Option<f64>,
    arm2_d2: Option<f64>,
    arm2_d3: Option<f64>,
    arm3_d1: Option<f64>,
    arm3_d2: Option<f64>,
    arm3_d3: Option<f64>,
    max: Option<f64>,
    max_days: Option<f64>,
}

#[derive(Serialize)]
struct MonteCarloRow {
    theta: f64,
    seed: u64,
    duration: f64,
    bin_width: f64,
    switch_frequency: f64,
    configured_phase: f64,
    estimate: f64,
    sigma: f64,
    from_arm2: f64,
    sigma_arm2: f64,
    from_arm3: f64,
    sigma_arm3: f64,
    resolved: bool,
}

#[derive(Serialize)]
struct ToleranceRow {
    theta: f64,
    gravitational_phase: f64,
    prefactor: f64,
    amplitude: f64,
    path_difference: Option<f64>,
    exit_plane_angle_mdeg: Option<f64>,
    arc_angle_mdeg: Option<f64>,
    /// Half oscillation period, tolerable when no finite bound exists.
    fallback_path_difference: Option<f64>,
    linear_path_bound: f64,
    oscillation_period_optical: f64,
    oscillation_period_arc: f64,
}

fn finite(t: f64) -> Option<f64> {
    t.is_finite().then_some(t)
}

fn single_theta(common: &Common) -> Result<f64> {
    match common.theta.as_ref().map(|t| t.0.as_slice()) {
        None => Ok(FRAC_PI_2),
        Some([t]) => Ok(*t),
        Some(_) => bail!("this command takes a single --theta"),
    }
}

fn write_table<T: Serialize>(common: &Common, schema: &str, rows: &[T]) -> Result<()> {
    emit_to(common.out.as_deref(), |w| {
        emit::write_records(schema, rows, common.format, w)
    })
}

fn emit_to<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> gravmzi::Result<()>,
{
    emit::to_path_or_stdout(path, f).with_context(|| match path {
        Some(p) => format!("writing {}", p.display()),
        None => "writing to stdout".into(),
    })
}

fn phase(s: &ExperimentScenario, common: &Common) -> Result<()> {
    let rows = s
        .theta_schedule
        .iter()
        .map(|&theta| {
            let (p12, p13) = s.gravitational_phases(theta)?;
            let (p_plus, p_minus) = detection_probabilities(p13, FRAC_PI_2, 1.0);
            Ok(PhaseRow {
                theta,
                dphi_g_12: p12,
                dphi_g_13: p13,
                p_plus,
                p_minus,
            })
        })
        .collect::<gravmzi::Result<Vec<_>>>()?;
    write_table(common, "gravmzi.phase", &rows)
}

fn earth_rotation(s: &ExperimentScenario, common: &Common, numeric: bool) -> Result<()> {
    let c = s.constants.c;
    let mut rows = Vec::new();
    for &theta in &s.theta_schedule {
        let (s1, s3) = (s.spool_at(0, theta), s.spool_at(2, theta));
        let (k1, k3) = (&s.kinematics[0], &s.kinematics[2]);
        let rot = gravmzi::earth_rotation::rotation_phase(
            &s1,
            k1,
            &s3,
            k3,
            s.fiber.wavelength,
            &s.constants,
        )?;
        let t1 = proper_time_closed(&s1, k1, &s.constants)?;
        let t3 = proper_time_closed(&s3, k3, &s.constants)?;
        let (n1, n3) = if numeric {
            let n1 = proper_time_numeric(&s1, k1, &s.constants, default_steps(k1, c))?;
            let n3 = proper_time_numeric(&s3, k3, &s.constants, default_steps(k3, c))?;
            (Some(n1), Some(n3))
        } else {
            (None, None)
        };
        rows.push(RotationRow {
            theta,
            prefactor: rotation_prefactor(&s1, k1, s.fiber.wavelength, &s.constants)?,
            linear: rot.linear,
            oscillating: rot.oscillating,
            secular: rot.secular,
            total: rot.total(),
            tau1_deviation_closed: t1.deviation(),
            tau3_deviation_closed: t3.deviation(),
            tau1_deviation_numeric: n1.map(|p| p.deviation),
            tau3_deviation_numeric: n3.map(|p| p.deviation),
            numeric_error_estimate: n1
                .zip(n3)
                .map(|(a, b)| a.error_estimate.max(b.error_estimate)),
        });
    }
    write_table(common, "gravmzi.earth_rotation", &rows)
}

fn dispersion(s: &ExperimentScenario, common: &Common) -> Result<()> {
    let c = s.constants.c;
    let w1 = temporal_width(&s.pulse, &s.dispersion[0], c)?;
    let w3 = temporal_width(&s.pulse, &s.dispersion[2], c)?;
    let rows = s
        .theta_schedule
        .iter()
        .map(|&theta| {
            let (_, p13) = s.gravitational_phases(theta)?;
            let (ideal, _) = detection_probabilities(p13, FRAC_PI_2, 1.0);
            let (calibrated, _) = detection_probabilities(0.0, FRAC_PI_2, 1.0);
            let (disp, _) =
                dispersive_detection_probability(w1.tau, w3.tau, p13, FRAC_PI_2, s.pulse.carrier)?;
            Ok(DispersionRow {
                theta,
                tau0: w1.tau0,
                tau_arm1: w1.tau,
                tau_arm3: w3.tau,
                broadening: w1.broadening,
                broadening_standard: w1.broadening_standard,
                visibility_13: s.pair_visibility(2, p13)?,
                probability_deviation: (disp - ideal).abs(),
                gravitational_shift: (ideal - calibrated).abs(),
            })
        })
        .collect::<gravmzi::Result<Vec<_>>>()?;
    write_table(common, "gravmzi.dispersion", &rows)
}

fn noise(
    s: &ExperimentScenario,
    common: &Common,
    f_lo: f64,
    f_hi: f64,
    points: usize,
) -> Result<()> {
    let psd = s.psd()?;
    let rows = emit::psd_table(&psd, f_lo, f_hi, points)?;
    let f = s.switch.modulation_frequency;
    let half = 0.5 * s.noise.detection_bandwidth;
    let rms = band_rms_phase(&psd, f - half, f + half)?;
    let (lo, hi) = psd.support();
    let best = choose_modulation_frequency(&psd, lo, hi, s.noise.detection_bandwidth, 200)?;
    eprintln!(
        "band rms at switch frequency {f:e} Hz: {rms:e} rad; quietest band centre {:e} Hz ({:e} rad)",
        best.frequency, best.rms
    );
    emit_to(common.out.as_deref(), |w| {
        emit::write_psd(&rows, common.format, w)
    })
}

fn integration_time(s: &ExperimentScenario, common: &Common) -> Result<()> {
    let rows = s
        .theta_schedule
        .iter()
        .map(|&theta| {
            let setup = s.counting_setup(theta)?;
            let t = setup.integration_times()?;
            let max = finite(setup.max_integration_time()?);
            Ok(TimeRow {
                theta,
                arm2_d1: finite(t[0][0]),
                arm2_d2: finite(t[0][1]),
                arm2_d3: finite(t[0][2]),
                arm3_d1: finite(t[1][0]),
                arm3_d2: finite(t[1][1]),
                arm3_d3: finite(t[1][2]),
                max,
                max_days: max.map(|t| t / 86400.0),
            })
        })
        .collect::<gravmzi::Result<Vec<_>>>()?;
    write_table(common, "gravmzi.integration_time", &rows)
}

fn montecarlo(
    s: &mut ExperimentScenario,
    common: &Common,
    switch_frequency: Option<f64>,
    bin_width: Option<f64>,
    counts: Option<&Path>,
) -> Result<()> {
    if let Some(f) = switch_frequency {
        s.switch.modulation_frequency = f;
        s.switch.validate()?;
    }
    let theta = single_theta(common)?;
    let setup = s.counting_setup(theta)?;
    let bw = bin_width.unwrap_or_else(|| default_bin_width(&setup.schedule));
    let duration = match common.duration {
        Some(d) => d,
        None => {
            let t = setup.max_integration_time()?;
            if !t.is_finite() {
                bail!("no signal at theta = {theta} rad; pass --duration");
            }
            (t / bw).ceil() * bw
        }
    };
    if duration / bw > MAX_BINS {
        bail!(
            "{:.3e} bins requested; lower --switch-frequency, raise --bin-width or shorten --duration",
            duration / bw
        );
    }
    let records = simulate_counts(&setup, duration, bw, common.seed)?;
    if let Some(path) = counts {
        emit_to(Some(path), |w| {
            emit::write_counts(&records, common.format, w)
        })?;
    }
    let est = demodulate(&records, &setup.schedule, &setup.demod_model(bw))?;
    let row = MonteCarloRow {
        theta,
        seed: common.seed,
        duration,
        bin_width: bw,
        switch_frequency: setup.schedule.modulation_frequency,
        configured_phase: setup.phase13,
        estimate: est.phase,
        sigma: est.sigma,
        from_arm2: est.from_arm2,
        sigma_arm2: est.sigma_arm2,
        from_arm3: est.from_arm3,
        sigma_arm3: est.sigma_arm3,
        resolved: est.phase.abs() > est.sigma,
    };
    write_table(common, "gravmzi.montecarlo", &[row])
}

fn tolerances(s: &ExperimentScenario, common: &Common) -> Result<()> {
    let theta = single_theta(common)?;
    let geometry = s.geometry_at(theta);
    let spool = s.spool_at(0, theta);
    let kin = &s.kinematics[0];
    let c = s.constants.c;
    let (_, dphi) = s.gravitational_phases(theta)?;
    let prefactor = rotation_prefactor(&spool, kin, s.fiber.wavelength, &s.constants)?;
    let (bound, fallback) = match required_alignment(&geometry, &s.fiber, &spool, kin, &s.constants)
    {
        Ok(b) => (Some(b), None),
        Err(Error::NoSolution { fallback_bound }) => (None, Some(fallback_bound)),
        Err(e) => return Err(e.into()),
    };
    let mdeg = |rad: f64| rad.to_degrees() * 1e3;
    let row = ToleranceRow {
        theta,
        gravitational_phase: dphi,
        prefactor,
        amplitude: 2.0 * prefactor.abs(),
        path_difference: bound.map(|b| b.path_difference),
        exit_plane_angle_mdeg: bound.map(|b| mdeg(b.exit_plane_angle)),
        arc_angle_mdeg: bound.map(|b| mdeg(b.arc_angle)),
        fallback_path_difference: fallback,
        linear_path_bound: linear_path_bound(&geometry, &s.fiber, &spool, kin, &s.constants)?,
        oscillation_period_optical: oscillation_period_optical(kin, c),
        oscillation_period_arc: oscillation_period_arc(spool.radius),
    };
    write_table(common, "gravmzi.tolerances", &[row])
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let mut s = ExperimentScenario::resolve(&common.scenario)
        .with_context(|| format!("loading scenario `{}`", common.scenario))?;
    if let Some(thetas) = &common.theta {
        s.theta_schedule = thetas.0.clone();
    }
    match cli.command {
        Command::Phase => phase(&s, common),
        Command::EarthRotation { numeric } => earth_rotation(&s, common, numeric),
        Command::Dispersion => dispersion(&s, common),
        Command::Noise { f_lo, f_hi, points } => noise(&s, common, f_lo, f_hi, points),
        Command::IntegrationTime => integration_time(&s, common),
        Command::Montecarlo {
            switch_frequency,
            bin_width,
            counts,
        } => montecarlo(
            &mut s,
            common,
            switch_frequency,
            bin_width,
            counts.as_deref(),
        ),
        Command::Sweep => {
            let result = run_sweep(&s)?;
            emit_to(common.out.as_deref(), |w| {
                emit::write_sweep(&result, common.format, w)
            })
        }
        Command::Tolerances => tolerances(&s, common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
