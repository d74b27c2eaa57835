//! Phase-noise budget over a piecewise power-law amplitude spectrum.
//!
//! The default spectrum is parametric: a `1/f` power region below 1 kHz, a
//! thermal plateau to 100 kHz and a steep roll-off beyond. Its level is
//! anchored at 1e-6 rad/sqrt(Hz) for 200 km of active fiber and scales as
//! the square root of length. A measured spectrum can be loaded from CSV
//! instead.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{ensure, positive};
use crate::numerics::log_grid;
use crate::{Error, Result};

/// Fiber thermal parameters. Only the anchor, corner frequencies and
/// support enter the parametric spectrum; the material constants are
/// carried for provenance of a measured table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalNoiseParams {
    /// W/(m K)
    pub thermal_conductivity: f64,
    /// 1/K
    pub dn_dt: f64,
    pub group_index: f64,
    /// 1/K
    pub expansion: f64,
    /// m^2/s
    pub diffusivity: f64,
    pub mode_field_radius: f64,
    pub cladding_radius: f64,
    pub wavelength: f64,
    /// rad/sqrt(Hz) on the plateau at `reference_length`.
    pub plateau_amplitude: f64,
    pub reference_length: f64,
    /// Lower corner: `1/f` power below, plateau above.
    pub flicker_corner: f64,
    /// Upper corner: plateau below, roll-off above.
    pub rolloff_corner: f64,
    /// Amplitude slope above `rolloff_corner`; must be <= -2.
    pub rolloff_slope: f64,
    pub min_frequency: f64,
    pub max_frequency: f64,
}

impl Default for ThermalNoiseParams {
    fn default() -> Self {
        Self {
            thermal_conductivity: 1.37,
            dn_dt: 9.52e-6,
            group_index: 1.468,
            expansion: 5e-7,
            diffusivity: 0.82e-6,
            mode_field_radius: 5.2e-6,
            cladding_radius: 62.5e-6,
            wavelength: 1550e-9,
            plateau_amplitude: 1e-6,
            reference_length: 2e5,
            flicker_corner: 1e3,
            rolloff_corner: 1e5,
            rolloff_slope: -2.0,
            min_frequency: 1e-2,
            max_frequency: 1e8,
        }
    }
}

impl ThermalNoiseParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.plateau_amplitude, "plateau_amplitude")?;
        positive(self.reference_length, "reference_length")?;
        positive(self.min_frequency, "min_frequency")?;
        ensure(
            self.min_frequency < self.flicker_corner
                && self.flicker_corner < self.rolloff_corner
                && self.rolloff_corner < self.max_frequency,
            "corner frequencies",
            "need min < flicker corner < roll-off corner < max",
        )?;
        ensure(
            self.rolloff_slope <= -2.0,
            "rolloff_slope",
            format!("must be <= -2, got {}", self.rolloff_slope),
        )
    }
}

/// `a(f) = amplitude_at_lo (f / f_lo)^slope` on `[f_lo, f_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdSegment {
    pub f_lo: f64,
    pub f_hi: f64,
    pub amplitude_at_lo: f64,
    pub slope: f64,
}

impl PsdSegment {
    fn amplitude(&self, f: f64) -> f64 {
        self.amplitude_at_lo * (f / self.f_lo).powf(self.slope)
    }

    /// Exact integral of `a(f)^2` over `[a, b]` inside the segment.
    fn power(&self, a: f64, b: f64) -> f64 {
        let e = 2.0 * self.slope + 1.0;
        let k = self.amplitude_at_lo * self.amplitude_at_lo * self.f_lo;
        if e.abs() < 1e-12 {
            k * (b / a).ln()
        } else {
            k / e * ((b / self.f_lo).powf(e) - (a / self.f_lo).powf(e))
        }
    }
}

/// Contiguous power-law segments. Amplitude in rad/sqrt(Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoisePsd {
    segments: Vec<PsdSegment>,
}

impl PhaseNoisePsd {
    pub fn new(segments: Vec<PsdSegment>) -> Result<Self> {
        ensure(!segments.is_empty(), "segments", "empty spectrum")?;
        for s in &segments {
            positive(s.f_lo, "f_lo")?;
            positive(s.amplitude_at_lo, "amplitude")?;
            ensure(s.f_hi > s.f_lo, "f_hi", "segment must have positive width")?;
            ensure(s.slope.is_finite(), "slope", "must be finite")?;
        }
        for w in segments.windows(2) {
            ensure(
                (w[1].f_lo - w[0].f_hi).abs() <= 1e-12 * w[0].f_hi,
                "segments",
                "must be contiguous",
            )?;
        }
        Ok(Self { segments })
    }

    /// Log-log interpolation of a table of `(frequency, amplitude)`.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        ensure(points.len() >= 2, "table", "need at least two rows")?;
        let mut segs = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            let ((f0, a0), (f1, a1)) = (w[0], w[1]);
            positive(f0, "freq_hz")?;
            positive(a0, "amp_rad_per_sqrthz")?;
            positive(a1, "amp_rad_per_sqrthz")?;
            ensure(f1 > f0, "freq_hz", "must be strictly increasing")?;
            segs.push(PsdSegment {
                f_lo: f0,
                f_hi: f1,
                amplitude_at_lo: a0,
                slope: (a1 / a0).ln() / (f1 / f0).ln(),
            });
        }
        Self::new(segs)
    }

    /// Reads `freq_hz,amp_rad_per_sqrthz` rows.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            freq_hz: f64,
            amp_rad_per_sqrthz: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let rows = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.freq_hz, r.amp_rad_per_sqrthz)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_table(&rows)
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.segments[0].f_lo,
            self.segments[self.segments.len() - 1].f_hi,
        )
    }

    pub fn segments(&self) -> &[PsdSegment] {
        &self.segments
    }

    fn check(&self, f: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if f.is_finite() && f >= lo && f <= hi {
            Ok(())
        } else {
            Err(Error::OutOfSupport { freq: f, lo, hi })
        }
    }

    /// Amplitude spectral density, rad/sqrt(Hz).
    pub fn amplitude(&self, f: f64) -> Result<f64> {
        self.check(f)?;
        let s = self
            .segments
            .iter()
            .find(|s| f <= s.f_hi)
            .unwrap_or(&self.segments[self.segments.len() - 1]);
        Ok(s.amplitude(f))
    }

    /// Power spectral density, rad^2/Hz.
    pub fn psd(&self, f: f64) -> Result<f64> {
        self.amplitude(f).map(|a| a * a)
    }
}

/// Parametric spectrum for `active_length` metres of fiber in the two
/// interfering arms.
pub fn default_psd(params: &ThermalNoiseParams, active_length: f64) -> Result<PhaseNoisePsd> {
    params.validate()?;
    positive(active_length, "active_length")?;
    let p = params.plateau_amplitude * (active_length / params.reference_length).sqrt();
    let f1 = params.flicker_corner;
    PhaseNoisePsd::new(vec![
        PsdSegment {
            f_lo: params.min_frequency,
            f_hi: f1,
            amplitude_at_lo: p * (f1 / params.min_frequency).sqrt(),
            slope: -0.5,
        },
        PsdSegment {
            f_lo: f1,
            f_hi: params.rolloff_corner,
            amplitude_at_lo: p,
            slope: 0.0,
        },
        PsdSegment {
            f_lo: params.rolloff_corner,
            f_hi: params.max_frequency,
            amplitude_at_lo: p,
            slope: params.rolloff_slope,
        },
    ])
}

/// `sqrt(integral of S(f) over [f_lo, f_hi])`, exact per segment.
pub fn band_rms_phase(psd: &PhaseNoisePsd, f_lo: f64, f_hi: f64) -> Result<f64> {
    psd.check(f_lo)?;
    psd.check(f_hi)?;
    ensure(
        f_hi > f_lo,
        "band",
        format!("need f_lo < f_hi, got [{f_lo}, {f_hi}]"),
    )?;
    let power: f64 = psd
        .segments
        .iter()
        .filter(|s| s.f_hi > f_lo && s.f_lo < f_hi)
        .map(|s| s.power(s.f_lo.max(f_lo), s.f_hi.min(f_hi)))
        .sum();
    Ok(power.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMargin {
    /// Signal over rms noise.
    pub ratio: f64,
    pub threshold: f64,
    pub passes: bool,
}

pub fn noise_margin(delta_phi_g: f64, rms: f64, threshold: f64) -> Result<NoiseMargin> {
    positive(rms, "rms")?;
    positive(threshold, "threshold")?;
    let ratio = delta_phi_g.abs() / rms;
    Ok(NoiseMargin {
        ratio,
        threshold,
        passes: ratio >= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationChoice {
    pub frequency: f64,
    /// Band rms in `[f - bandwidth/2, f + bandwidth/2]`.
    pub rms: f64,
}

/// Modulation frequency in `[band_lo, band_hi]` whose detection band of
/// width `bandwidth` collects the least noise, searched on a log grid of
/// `grid` points. Ties go to the lowest frequency.
pub fn choose_modulation_frequency(
    psd: &PhaseNoisePsd,
    band_lo: f64,
    band_hi: f64,
    bandwidth: f64,
    grid: usize,
) -> Result<ModulationChoice> {
    positive(bandwidth, "bandwidth")?;
    let half = 0.5 * bandwidth;
    let (s_lo, s_hi) = psd.support();
    // keep every detection band inside the support
    let lo = band_lo.max((s_lo + half) * (1.0 + 1e-12));
    let hi = band_hi.min((s_hi - half) * (1.0 - 1e-12));
    ensure(
        hi > lo,
        "band",
        "candidate band narrower than the detection bandwidth",
    )?;
    let mut best: Option<ModulationChoice> = None;
    for f in log_grid(lo, hi, grid.max(2)) {
        let f = f.clamp(lo, hi);
        let rms = band_rms_phase(psd, f - half, f + half)?;
        // strict improvement keeps the lowest frequency on ties
        if best.is_none_or(|b| rms < b.rms * (1.0 - 1e-12)) {
            best = Some(ModulationChoice { frequency: f, rms });
        }
    }
    Ok(best.expect("grid has at least two points"))
}
