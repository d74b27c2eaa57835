use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("spool geometries differ in `{field}` ({a} vs {b})")]
    GeometryMismatch { field: &'static str, a: f64, b: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds {tolerance:e}")]
    NonConvergence { estimate: f64, tolerance: f64 },

    /// The gravitational phase exceeds the whole oscillation amplitude, so any
    /// path mismatch inside one half-period is tolerable.
    #[error("no finite alignment bound; the full half-period {fallback_bound:e} m is tolerable")]
    NoSolution { fallback_bound: f64 },

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("frequency {freq:e} Hz outside spectrum support [{lo:e}, {hi:e}] Hz")]
    OutOfSupport { freq: f64, lo: f64, hi: f64 },

    #[error("cannot parse quantity `{input}`: {reason}")]
    Unit { input: String, reason: String },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure(cond: bool, field: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain {
            field,
            reason: reason.into(),
        })
    }
}

pub(crate) fn positive(value: f64, field: &'static str) -> Result<()> {
    ensure(
        value.is_finite() && value > 0.0,
        field,
        format!("must be finite and > 0, got {value}"),
    )
}

pub(crate) fn non_negative(value: f64, field: &'static str) -> Result<()> {
    ensure(
        value.is_finite() && value >= 0.0,
        field,
        format!("must be finite and >= 0, got {value}"),
    )
}

pub(crate) fn finite(value: f64, field: &'static str) -> Result<()> {
    ensure(
        value.is_finite(),
        field,
        format!("must be finite, got {value}"),
    )
}

pub(crate) fn unit_interval(value: f64, field: &'static str, open_low: bool) -> Result<()> {
    let low_ok = if open_low { value > 0.0 } else { value >= 0.0 };
    ensure(
        value.is_finite() && low_ok && value <= 1.0,
        field,
        format!(
            "must lie in {}0, 1], got {value}",
            if open_low { "(" } else { "[" }
        ),
    )
}
