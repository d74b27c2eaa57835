//! Phase model for a three-arm fiber-spool Mach-Zehnder interferometer that
//! probes the gravitational redshift of single photons in a rotating Earth
//! frame.
//!
//! The crate is organised in layers:
//!
//! * [`phase`] holds the physical constants, the interferometer geometry and
//!   the gravitational phase itself.
//! * [`earth_rotation`] models each photon as a helical worldline in a
//!   rotating frame and produces the Earth-rotation phase, both in closed
//!   form and by direct proper-time quadrature.
//! * [`dispersion`] propagates Gaussian pulses through dispersive fiber and
//!   gives the resulting loss of visibility.
//! * [`noise`] is a phase-noise budget over a piecewise power-law spectrum.
//! * [`counting`] turns detection probabilities into integration times,
//!   seeded Poisson count streams and a demodulated phase estimate.
//! * [`scenario`], [`sweep`] and [`emit`] wire the above into a reproducible
//!   experiment description, an angle sweep and CSV/JSON output.

pub mod counting;
pub mod dispersion;
pub mod earth_rotation;
pub mod emit;
mod error;
pub mod noise;
pub mod numerics;
pub mod phase;
pub mod scenario;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
