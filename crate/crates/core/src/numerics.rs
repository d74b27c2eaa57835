//! Small numerical kernels shared by the physics modules.

use std::f64::consts::{PI, TAU};

use crate::{Error, Result};

// Low word of 2*pi as a double-double pair.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Error-free sum: returns `(s, e)` with `s + e == a + b` exactly.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free product via fused multiply-add.
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `omega * (len_hi + len_lo) / c` reduced to `[-pi, pi]`.
///
/// Optical phases along a 100 km spool reach ~1e6 rad, where a plain
/// product already loses ~1e-10 rad. The product and the reduction are done
/// in double-double so the returned angle is good to a few ulp.
pub fn reduced_phase(omega: f64, len_hi: f64, len_lo: f64, c: f64) -> f64 {
    let (p, pe) = two_prod(omega, len_hi);
    let pe = pe + omega * len_lo;
    let q = p / c;
    let r = (-q).mul_add(c, p);
    let q_lo = (r + pe) / c;
    let k = (q / TAU).round();
    let head = (-k).mul_add(TAU, q);
    let x = head - k * TAU_LO + q_lo;
    if x > PI {
        x - TAU
    } else if x < -PI {
        x + TAU
    } else {
        x
    }
}

/// Reduced `omega * length / c`.
pub fn optical_phase(omega: f64, length: f64, c: f64) -> f64 {
    reduced_phase(omega, length, 0.0, c)
}

/// Reduced `omega * (l1 - l3) / (2c)` and `omega * (l1 + l3) / (2c)`.
///
/// The sum and difference are formed without rounding so a sub-micron
/// mismatch between two 100 km lengths survives intact.
pub fn half_phases(omega: f64, l1: f64, l3: f64, c: f64) -> (f64, f64) {
    let (d, de) = two_sum(l1, -l3);
    let (s, se) = two_sum(l1, l3);
    (
        reduced_phase(omega, 0.5 * d, 0.5 * de, c),
        reduced_phase(omega, 0.5 * s, 0.5 * se, c),
    )
}

/// Bisection on a bracketing interval. `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain {
            field: "bracket",
            reason: format!("f({lo:e}) and f({hi:e}) share a sign"),
        });
    }
    // 200 halvings exhaust any f64 interval.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}
