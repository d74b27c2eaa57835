//! Quantities with unit suffixes, e.g. `"100 km"`, `"48.21 deg"`,
//! `"18 ps/(km nm)"`. A bare number is taken in the base unit of its
//! dimension.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::marker::PhantomData;

use crate::{Error, Result};

/// Conversion from a unit to the base unit of its dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// Exact decimal shift, so `1550 nm` parses to the same double as
    /// `1550e-9`.
    Pow10(i32),
    Factor(f64),
}

use Scale::{Factor, Pow10};

/// A physical dimension: a base unit plus accepted suffixes.
pub trait Dimension {
    const NAME: &'static str;
    const BASE: &'static str;
    fn units() -> &'static [(&'static str, Scale)];
}

macro_rules! dimension {
    ($name:ident, $label:literal, $base:literal, [$(($u:literal, $f:expr)),* $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub struct $name;
        impl Dimension for $name {
            const NAME: &'static str = $label;
            const BASE: &'static str = $base;
            fn units() -> &'static [(&'static str, Scale)] {
                const U: &[(&str, Scale)] = &[$(($u, $f)),*];
                U
            }
        }
    };
}

dimension!(
    Length,
    "length",
    "m",
    [
        ("m", Pow10(0)),
        ("km", Pow10(3)),
        ("cm", Pow10(-2)),
        ("mm", Pow10(-3)),
        ("um", Pow10(-6)),
        ("µm", Pow10(-6)),
        ("μm", Pow10(-6)),
        ("nm", Pow10(-9)),
        ("pm", Pow10(-12)),
    ]
);
dimension!(
    Time,
    "time",
    "s",
    [
        ("s", Pow10(0)),
        ("ms", Pow10(-3)),
        ("us", Pow10(-6)),
        ("µs", Pow10(-6)),
        ("μs", Pow10(-6)),
        ("ns", Pow10(-9)),
        ("ps", Pow10(-12)),
        ("fs", Pow10(-15)),
        ("min", Factor(60.0)),
        ("h", Factor(3600.0)),
        ("day", Factor(86400.0)),
        ("days", Factor(86400.0)),
    ]
);
dimension!(
    Angle,
    "angle",
    "rad",
    [
        ("rad", Pow10(0)),
        ("mrad", Pow10(-3)),
        ("urad", Pow10(-6)),
        ("µrad", Pow10(-6)),
        ("μrad", Pow10(-6)),
        ("deg", Factor(PI / 180.0)),
        ("°", Factor(PI / 180.0)),
        ("mdeg", Factor(PI / 180e3)),
    ]
);
dimension!(
    Frequency,
    "frequency",
    "Hz",
    [
        ("Hz", Pow10(0)),
        ("mHz", Pow10(-3)),
        ("kHz", Pow10(3)),
        ("MHz", Pow10(6)),
        ("GHz", Pow10(9)),
        ("THz", Pow10(12)),
    ]
);
dimension!(
    AngularRate,
    "angular rate",
    "rad/s",
    [
        ("rad/s", Pow10(0)),
        ("krad/s", Pow10(3)),
        ("Mrad/s", Pow10(6)),
        ("Grad/s", Pow10(9)),
        ("deg/s", Factor(PI / 180.0)),
    ]
);
dimension!(
    Speed,
    "speed",
    "m/s",
    [("m/s", Pow10(0)), ("km/s", Pow10(3))]
);
dimension!(
    Rate,
    "rate",
    "1/s",
    [
        ("/s", Pow10(0)),
        ("1/s", Pow10(0)),
        ("s^-1", Pow10(0)),
        ("Hz", Pow10(0)),
        ("cps", Pow10(0)),
        ("kHz", Pow10(3)),
        ("MHz", Pow10(6)),
    ]
);
dimension!(
    Attenuation,
    "attenuation",
    "dB/km",
    [("dB/km", Pow10(0)), ("dB/m", Pow10(3))]
);
dimension!(Loss, "loss", "dB", [("dB", Pow10(0))]);
dimension!(
    Dispersion,
    "dispersion",
    "ps/(km nm)",
    [
        ("ps/(kmnm)", Pow10(0)),
        ("ps/km/nm", Pow10(0)),
        ("ps/nm/km", Pow10(0)),
        ("ps/(nmkm)", Pow10(0)),
        ("s/m^2", Pow10(6)),
        ("s/m2", Pow10(6)),
    ]
);
dimension!(
    PhaseNoise,
    "phase-noise amplitude",
    "rad/sqrt(Hz)",
    [
        ("rad/sqrt(Hz)", Pow10(0)),
        ("rad/√Hz", Pow10(0)),
        ("rad/Hz^0.5", Pow10(0)),
        ("rad/Hz^(1/2)", Pow10(0)),
    ]
);
dimension!(
    Acceleration,
    "acceleration",
    "m/s^2",
    [("m/s^2", Pow10(0)), ("m/s²", Pow10(0))]
);
dimension!(
    Action,
    "action",
    "J s",
    [("Js", Pow10(0)), ("J*s", Pow10(0))]
);

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '·' | '⋅' | '*'))
        .collect()
}

/// Length of the leading floating-point literal.
fn number_prefix(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    if i == digits_start {
        return 0;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Parses `input` as a quantity of dimension `D`, returning base units.
pub fn parse<D: Dimension>(input: &str) -> Result<f64> {
    let err = |reason: String| Error::Unit {
        input: input.to_string(),
        reason,
    };
    let s = input.trim();
    let n = number_prefix(s);
    if n == 0 {
        return Err(err("expected a number".into()));
    }
    let number = &s[..n];
    let unit = squash(&s[n..]);
    let scale = if unit.is_empty() {
        Pow10(0)
    } else {
        D::units()
            .iter()
            .find(|(u, _)| squash(u) == unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| {
                let known: Vec<_> = D::units().iter().map(|(u, _)| *u).collect();
                err(format!(
                    "unknown {} unit `{unit}`; expected one of {}",
                    D::NAME,
                    known.join(", ")
                ))
            })?
    };
    let value = match scale {
        Pow10(p) => {
            let (mantissa, exp) = match number.find(['e', 'E']) {
                Some(i) => (
                    &number[..i],
                    number[i + 1..]
                        .parse::<i32>()
                        .map_err(|e| err(format!("{e}")))?,
                ),
                None => (number, 0),
            };
            format!("{mantissa}e{}", exp + p).parse::<f64>()
        }
        Factor(f) => number.parse::<f64>().map(|v| v * f),
    };
    value.map_err(|e| err(format!("{e}")))
}

/// A value of dimension `D` stored in base units. Deserializes from a
/// number or a string with a unit suffix; serializes as a number.
pub struct Quantity<D> {
    pub value: f64,
    _dim: PhantomData<D>,
}

impl<D> Quantity<D> {
    pub const fn new(value: f64) -> Self {
        Self {
            value,
            _dim: PhantomData,
        }
    }
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<D> Copy for Quantity<D> {}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, D::BASE)
    }
}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<D> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        struct V<D>(PhantomData<D>);
        impl<D: Dimension> Visitor<'_> for V<D> {
            type Value = Quantity<D>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a {} such as \"1.5 {}\"", D::NAME, D::BASE)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(Quantity::new(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(Quantity::new(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(Quantity::new(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                parse::<D>(v).map(Quantity::new).map_err(E::custom)
            }
        }
        d.deserialize_any(V(PhantomData))
    }
}
