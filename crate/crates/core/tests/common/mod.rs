#![allow(dead_code)]

use gravmzi::numerics::simpson;
use std::f64::consts::PI;

pub const C: f64 = 2.997_924_58e8;

/// Mean photon number at the `+` port from the time-domain flux
/// `|R|^2 |T|^2 |f + f'|^2` of two normalised Gaussian envelopes, chirp
/// neglected. `f'` is delayed by `dphi / w0` and carries phase `dphi + phi`.
pub fn flux_probability(tau: f64, tau_p: f64, dphi: f64, phi: f64, carrier: f64) -> f64 {
    let delay = dphi / carrier;
    let a = |t: f64, w: f64| (2.0 * PI * w * w).powf(-0.25) * (-t * t / (4.0 * w * w)).exp();
    let (sn, cs) = (dphi + phi).sin_cos();
    let flux = |t: f64| {
        let x = a(t, tau);
        let y = a(t - delay, tau_p);
        let re = x + y * cs;
        let im = y * sn;
        0.25 * (re * re + im * im)
    };
    let span = 14.0 * tau.max(tau_p) + delay.abs();
    simpson(flux, -span, span, 20_000)
}

/// Small LCG; the tests only need spread, not quality.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform on `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}
