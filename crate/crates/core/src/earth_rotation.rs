//! Earth-rotation phase of a photon circling a fiber spool.
//!
//! Lab axes: x South, y East, z up. The photon sits on a helix of radius `b`
//! around the spool axis; the chain
//! `R_z(psi) R_y(phi') S(R) R_z(xi) R_y(theta')` carries the helix into the
//! Earth-centred inertial frame, with `theta' = pi/2 - theta`,
//! `phi' = pi/2 - phi` and `psi = Omega t + psi0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{ensure, finite, non_negative, positive};
use crate::numerics::{bisect, half_phases, optical_phase, two_sum};
use crate::phase::{gravitational_phase, FiberOptical, InterferometerGeometry, PhysicalConstants};
use crate::{Error, Result};

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Orientation and placement of one spool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpoolGeometry {
    /// `b`
    pub radius: f64,
    /// `h`, offset of the first coil along the spool axis.
    pub axial_offset: f64,
    /// `theta`, angle between the spool axis and the local horizontal.
    pub inclination: f64,
    /// `xi`, azimuth of the axis projection measured from South towards East.
    pub azimuth: f64,
    /// `phi`
    pub latitude: f64,
    /// `psi0`
    pub initial_earth_angle: f64,
    /// `alpha0`, plane in which the photon enters the spool.
    pub entry_plane: f64,
}

impl SpoolGeometry {
    pub fn validate(&self) -> Result<()> {
        non_negative(self.radius, "radius")?;
        finite(self.axial_offset, "axial_offset")?;
        finite(self.inclination, "inclination")?;
        finite(self.azimuth, "azimuth")?;
        finite(self.initial_earth_angle, "initial_earth_angle")?;
        finite(self.entry_plane, "entry_plane")?;
        ensure(
            self.latitude.abs() <= FRAC_PI_2,
            "latitude",
            format!("must lie in [-pi/2, pi/2], got {}", self.latitude),
        )
    }
}

/// Motion of the photon along the helix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonKinematics {
    /// `omega`, mean angular speed around the spool axis.
    pub angular_speed: f64,
    /// `v_z`, mean speed along the spool axis.
    pub axial_speed: f64,
    /// Geometric fiber length `l`.
    pub fiber_length: f64,
    pub group_index: f64,
}

impl PhotonKinematics {
    /// Helix with axial advance `pitch` per turn, traversed at `c / N`.
    pub fn from_winding(
        radius: f64,
        pitch: f64,
        fiber_length: f64,
        group_index: f64,
        c: f64,
    ) -> Result<Self> {
        positive(radius, "radius")?;
        non_negative(pitch, "pitch")?;
        let v = c / group_index;
        let turn = (TAU * radius).hypot(pitch);
        let kin = Self {
            angular_speed: v * TAU / turn,
            axial_speed: v * pitch / turn,
            fiber_length,
            group_index,
        };
        kin.validate()?;
        Ok(kin)
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.angular_speed, "angular_speed")?;
        finite(self.axial_speed, "axial_speed")?;
        positive(self.fiber_length, "fiber_length")?;
        ensure(
            self.group_index.is_finite() && self.group_index >= 1.0,
            "group_index",
            format!("must be >= 1, got {}", self.group_index),
        )
    }

    /// `L = N l`
    pub fn optical_length(&self) -> f64 {
        self.group_index * self.fiber_length
    }

    /// `T = L / c`
    pub fn transit_time(&self, c: f64) -> f64 {
        self.optical_length() / c
    }
}

/// `beta0^2 = (b^2 omega^2 + v_z^2) / c^2`
pub fn beta0_sq(spool: &SpoolGeometry, kin: &PhotonKinematics, c: f64) -> f64 {
    let bw = spool.radius * kin.angular_speed;
    (bw * bw + kin.axial_speed * kin.axial_speed) / (c * c)
}

fn validate_pair(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
) -> Result<f64> {
    spool.validate()?;
    kin.validate()?;
    consts.validate()?;
    let b2 = beta0_sq(spool, kin, consts.c);
    ensure(
        b2 < 1.0,
        "angular_speed",
        format!("photon speed reaches c (beta0^2 = {b2})"),
    )?;
    Ok(b2)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `R_z(xi) R_y(theta')`: spool frame into the lab frame.
fn spool_to_lab(spool: &SpoolGeometry) -> Mat3 {
    mat_mul(&rot_z(spool.azimuth), &rot_y(FRAC_PI_2 - spool.inclination))
}

/// Spool frame into the Earth-fixed frame (the chain without `R_z(psi)`).
fn spool_to_earth(spool: &SpoolGeometry) -> Mat3 {
    mat_mul(&rot_y(FRAC_PI_2 - spool.latitude), &spool_to_lab(spool))
}

/// Angle of the photon around the spool axis as a function of time.
pub trait SpiralAngle {
    fn angle(&self, t: f64) -> f64;
    fn rate(&self, t: f64) -> f64;
}

/// `alpha(t) = alpha0 + omega t`
#[derive(Debug, Clone, Copy)]
pub struct UniformSpiral {
    pub alpha0: f64,
    pub omega: f64,
}

impl SpiralAngle for UniformSpiral {
    fn angle(&self, t: f64) -> f64 {
        self.alpha0 + self.omega * t
    }
    fn rate(&self, _t: f64) -> f64 {
        self.omega
    }
}

/// `alpha(t) = alpha0 + omega t + epsilon alpha1(t)`, with the first-order
/// correction that keeps the photon speed constant in the lab.
#[derive(Debug, Clone, Copy)]
pub struct CorrectedSpiral {
    spool: SpoolGeometry,
    kin: PhotonKinematics,
    c: f64,
    epsilon: f64,
}

impl CorrectedSpiral {
    pub fn new(spool: &SpoolGeometry, kin: &PhotonKinematics, consts: &PhysicalConstants) -> Self {
        Self {
            spool: *spool,
            kin: *kin,
            c: consts.c,
            epsilon: consts.earth_radius * consts.earth_angular_speed / consts.c,
        }
    }
}

impl SpiralAngle for CorrectedSpiral {
    fn angle(&self, t: f64) -> f64 {
        self.spool.entry_plane
            + self.kin.angular_speed * t
            + self.epsilon * alpha1(&self.spool, &self.kin, self.c, t)
    }
    fn rate(&self, t: f64) -> f64 {
        self.kin.angular_speed + self.epsilon * alpha1_rate(&self.spool, &self.kin, self.c, t)
    }
}

/// Any pair of closures `(alpha, alpha_dot)`.
pub struct FnSpiral<A, R>(pub A, pub R);

impl<A: Fn(f64) -> f64, R: Fn(f64) -> f64> SpiralAngle for FnSpiral<A, R> {
    fn angle(&self, t: f64) -> f64 {
        (self.0)(t)
    }
    fn rate(&self, t: f64) -> f64 {
        (self.1)(t)
    }
}

/// Position in the Earth-fixed frame, i.e. before the `R_z(psi)` rotation.
/// `m` is [`spool_to_earth`]; `R_y(phi') (0, 0, R)` is the lab origin.
fn earth_fixed_position(
    m: &Mat3,
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    r: f64,
    alpha: f64,
    t: f64,
) -> Vec3 {
    let b = spool.radius;
    let (s, c) = alpha.sin_cos();
    let p = mat_vec(m, &[b * c, b * s, kin.axial_speed * t + spool.axial_offset]);
    let (sl, cl) = (FRAC_PI_2 - spool.latitude).sin_cos();
    [p[0] + r * sl, p[1], p[2] + r * cl]
}

fn earth_fixed_velocity(
    m: &Mat3,
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    alpha: f64,
    alpha_dot: f64,
) -> Vec3 {
    let b = spool.radius;
    let (s, c) = alpha.sin_cos();
    mat_vec(m, &[-b * alpha_dot * s, b * alpha_dot * c, kin.axial_speed])
}

/// Four-position `(ct, x, y, z)` in the Earth-centred inertial frame.
pub fn worldline(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
    alpha: &impl SpiralAngle,
    t: f64,
) -> [f64; 4] {
    let m = spool_to_earth(spool);
    let y = earth_fixed_position(&m, spool, kin, consts.earth_radius, alpha.angle(t), t);
    let psi = consts.earth_angular_speed * t + spool.initial_earth_angle;
    let x = mat_vec(&rot_z(psi), &y);
    [consts.c * t, x[0], x[1], x[2]]
}

/// `d x / dt`, from the product rule on the rotation chain.
pub fn worldline_tangent(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
    alpha: &impl SpiralAngle,
    t: f64,
) -> [f64; 4] {
    let m = spool_to_earth(spool);
    let a = alpha.angle(t);
    let y = earth_fixed_position(&m, spool, kin, consts.earth_radius, a, t);
    let yd = earth_fixed_velocity(&m, spool, kin, a, alpha.rate(t));
    let om = consts.earth_angular_speed;
    let v = [yd[0] - om * y[1], yd[1] + om * y[0], yd[2]];
    let psi = om * t + spool.initial_earth_angle;
    let x = mat_vec(&rot_z(psi), &v);
    [consts.c, x[0], x[1], x[2]]
}

/// Lab worldline: the chain with `b = v_z = h = 0`.
pub fn lab_worldline(spool: &SpoolGeometry, consts: &PhysicalConstants, t: f64) -> [f64; 4] {
    let lab = SpoolGeometry {
        radius: 0.0,
        axial_offset: 0.0,
        ..*spool
    };
    let kin = PhotonKinematics {
        angular_speed: 1.0,
        axial_speed: 0.0,
        fiber_length: 1.0,
        group_index: 1.0,
    };
    worldline(
        &lab,
        &kin,
        consts,
        &UniformSpiral {
            alpha0: 0.0,
            omega: 0.0,
        },
        t,
    )
}

pub fn lab_worldline_tangent(
    spool: &SpoolGeometry,
    consts: &PhysicalConstants,
    t: f64,
) -> [f64; 4] {
    let lab = SpoolGeometry {
        radius: 0.0,
        axial_offset: 0.0,
        ..*spool
    };
    let kin = PhotonKinematics {
        angular_speed: 1.0,
        axial_speed: 0.0,
        fiber_length: 1.0,
        group_index: 1.0,
    };
    worldline_tangent(
        &lab,
        &kin,
        consts,
        &UniformSpiral {
            alpha0: 0.0,
            omega: 0.0,
        },
        t,
    )
}

/// Minkowski product with signature `(-, +, +, +)`.
pub fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn k_coefficient(spool: &SpoolGeometry, kin: &PhotonKinematics, c: f64) -> f64 {
    let b = spool.radius;
    if b == 0.0 {
        return 0.0;
    }
    let bw = b * kin.angular_speed;
    (bw * bw + kin.axial_speed * kin.axial_speed) / (c * b)
}

/// First-order correction `d alpha1 / dt` to the angular speed.
///
/// Zero for a degenerate spool (`b = 0`), where the angle is not defined.
pub fn alpha1_rate(spool: &SpoolGeometry, kin: &PhotonKinematics, c: f64, t: f64) -> f64 {
    let k = k_coefficient(spool, kin, c);
    let w = kin.angular_speed * t + spool.entry_plane;
    // sin(phi') = cos(phi), cos(theta') = sin(theta)
    -k * spool.latitude.cos()
        * (spool.azimuth.cos() * w.cos()
            + spool.inclination.sin() * spool.azimuth.sin() * (1.0 - w.sin()))
}

/// Antiderivative of [`alpha1_rate`] with `alpha1(0) = 0`.
pub fn alpha1(spool: &SpoolGeometry, kin: &PhotonKinematics, c: f64, t: f64) -> f64 {
    let k = k_coefficient(spool, kin, c);
    let om = kin.angular_speed;
    let a0 = spool.entry_plane;
    let w = om * t + a0;
    -k * spool.latitude.cos()
        * (spool.azimuth.cos() * (w.sin() - a0.sin()) / om
            + spool.inclination.sin() * spool.azimuth.sin() * (t + (w.cos() - a0.cos()) / om))
}

/// Proper time spent in one spool, split so that sub-femtosecond parts are
/// not lost against the transit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperTime {
    pub coordinate_time: f64,
    /// `T / gamma0`
    pub dilated: f64,
    /// Everything beyond `T / gamma0`.
    pub deviation: f64,
    /// Richardson estimate of the quadrature error in `deviation`.
    pub error_estimate: f64,
}

impl ProperTime {
    pub fn total(&self) -> f64 {
        self.dilated + self.deviation
    }
}

/// Steps giving 64 quadrature intervals per turn.
pub fn default_steps(kin: &PhotonKinematics, c: f64) -> usize {
    let turns = kin.angular_speed * kin.transit_time(c) / TAU;
    ((turns * 64.0).ceil() as usize).max(64)
}

/// Proper time from direct quadrature of `sqrt(-eta(x', x')) / c`.
///
/// `alpha1` is integrated with classical RK4 on the quadrature grid. The
/// integrand is the departure of `|v|^2` from `beta0^2 c^2`, evaluated
/// without forming `|v|^2` itself. Simpson on `steps` and `steps / 2`
/// intervals gives a Richardson error estimate; more than `1e-15 * tau`
/// is reported as non-convergence.
pub fn proper_time_numeric(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
    steps: usize,
) -> Result<ProperTime> {
    let b2 = validate_pair(spool, kin, consts)?;
    ensure(steps >= 2, "steps", format!("need at least 2, got {steps}"))?;
    let steps = steps.div_ceil(4) * 4;

    let c = consts.c;
    let om_e = consts.earth_angular_speed;
    let r = consts.earth_radius;
    let eps = r * om_e / c;
    let t_end = kin.transit_time(c);
    let g0inv = (1.0 - b2).sqrt();
    let g0sq = 1.0 / (1.0 - b2);
    let b = spool.radius;
    let omega = kin.angular_speed;
    let m = spool_to_earth(spool);
    let h = t_end / steps as f64;

    let integrand = |t: f64, a1: f64, a1_rate: f64| -> f64 {
        let alpha = spool.entry_plane + omega * t + eps * a1;
        let d = eps * a1_rate;
        let y = earth_fixed_position(&m, spool, kin, r, alpha, t);
        let yd = earth_fixed_velocity(&m, spool, kin, alpha, omega + d);
        let w = [-om_e * y[1], om_e * y[0], 0.0];
        let dev = (dot(&w, &w) + 2.0 * dot(&w, &yd) + b * b * d * (2.0 * omega + d)) / (c * c);
        let x = g0sq * dev;
        g0inv * (-x / (1.0 + (1.0 - x).sqrt()))
    };

    let rate = |t: f64| alpha1_rate(spool, kin, c, t);
    let mut a1 = 0.0;
    let mut r0 = rate(0.0);
    let f0 = integrand(0.0, a1, r0);
    let mut fine = f0;
    let mut coarse = f0;
    for k in 1..=steps {
        let t0 = h * (k - 1) as f64;
        let t1 = h * k as f64;
        let rm = rate(t0 + 0.5 * h);
        let r1 = rate(t1);
        a1 += h / 6.0 * (r0 + 4.0 * rm + r1);
        r0 = r1;
        let f = integrand(t1, a1, r1);
        if k == steps {
            fine += f;
            coarse += f;
        } else {
            fine += if k % 2 == 1 { 4.0 * f } else { 2.0 * f };
            if k % 2 == 0 {
                coarse += if (k / 2) % 2 == 1 { 4.0 * f } else { 2.0 * f };
            }
        }
    }
    let fine = fine * h / 3.0;
    let coarse = coarse * 2.0 * h / 3.0;
    let error_estimate = (fine - coarse).abs() / 15.0;
    let deviation = fine + (fine - coarse) / 15.0;
    let dilated = g0inv * t_end;
    let tolerance = 1e-15 * dilated;
    if error_estimate.is_nan() || error_estimate > tolerance {
        return Err(Error::NonConvergence {
            estimate: error_estimate,
            tolerance,
        });
    }
    Ok(ProperTime {
        coordinate_time: t_end,
        dilated,
        deviation,
        error_estimate,
    })
}

/// First-order closed form of the proper time, split into parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedProperTime {
    pub coordinate_time: f64,
    /// `T / gamma0`
    pub dilated: f64,
    /// Bounded term oscillating with `omega T + alpha0`.
    pub oscillating: f64,
    /// Term growing linearly in `T`; vanishes for `xi = n pi`.
    pub secular: f64,
}

impl ClosedProperTime {
    pub fn total(&self) -> f64 {
        self.dilated + self.oscillating + self.secular
    }

    pub fn deviation(&self) -> f64 {
        self.oscillating + self.secular
    }
}

/// Proper time to first order in `epsilon = R Omega / c`.
///
/// Unlike the bare textbook expression this keeps the lower integration
/// limits `sin(alpha0)`, `cos(alpha0)` and the secular drift generated by
/// the `cos(theta') sin(xi)` part of `alpha1`; without them the result
/// departs from the quadrature at first order.
pub fn proper_time_closed(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
) -> Result<ClosedProperTime> {
    let b2 = validate_pair(spool, kin, consts)?;
    let c = consts.c;
    let g0inv = (1.0 - b2).sqrt();
    let t_end = kin.transit_time(c);
    let a0 = spool.entry_plane;
    let w = optical_phase(kin.angular_speed, kin.optical_length(), c) + a0;
    let (sx, cx) = spool.azimuth.sin_cos();
    let st = spool.inclination.sin();
    let pref = spool.radius * consts.earth_radius * consts.earth_angular_speed / (c * c)
        * spool.latitude.cos();
    let oscillating = -g0inv * pref * (cx * (w.sin() - a0.sin()) + st * sx * (w.cos() - a0.cos()));
    let secular = -t_end / g0inv * secular_rate(spool, kin, consts, b2);
    Ok(ClosedProperTime {
        coordinate_time: t_end,
        dilated: g0inv * t_end,
        oscillating,
        secular,
    })
}

/// `R Omega cos(phi) sin(xi) (cos(theta) v_z - beta0^2 b omega sin(theta)) / c^2`
fn secular_rate(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
    b2: f64,
) -> f64 {
    let c = consts.c;
    consts.earth_radius
        * consts.earth_angular_speed
        * spool.latitude.cos()
        * spool.azimuth.sin()
        * (spool.inclination.cos() * kin.axial_speed
            - b2 * spool.radius * kin.angular_speed * spool.inclination.sin())
        / (c * c)
}

/// The closed form exactly as usually quoted:
/// `gamma0^-1 (T - b R Omega / c^2 sin(phi') (cos(xi) sin(omega T + alpha0)
/// + cos(theta') sin(xi) cos(omega T + alpha0)))`.
///
/// Kept for comparison; it omits the integration constants and the secular
/// term carried by [`proper_time_closed`].
pub fn proper_time_printed(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let b2 = validate_pair(spool, kin, consts)?;
    let c = consts.c;
    let t_end = kin.transit_time(c);
    let w = optical_phase(kin.angular_speed, kin.optical_length(), c) + spool.entry_plane;
    let pref = spool.radius * consts.earth_radius * consts.earth_angular_speed / (c * c)
        * spool.latitude.cos();
    Ok((1.0 - b2).sqrt()
        * (t_end
            - pref
                * (spool.azimuth.cos() * w.sin()
                    + spool.inclination.sin() * spool.azimuth.sin() * w.cos())))
}

/// Earth-rotation phase between arms 1 and 3, by component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationPhase {
    /// `gamma0^-1 2 pi dl / lambda`, the ordinary path-length phase.
    pub linear: f64,
    /// Spool-geometry term built from `F` and `F'`.
    pub oscillating: f64,
    /// Secular drift difference; zero for equal optical lengths or `xi = n pi`.
    pub secular: f64,
}

impl RotationPhase {
    pub fn total(&self) -> f64 {
        self.linear + self.oscillating + self.secular
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) || a == b
}

fn check_shared(
    s1: &SpoolGeometry,
    k1: &PhotonKinematics,
    s3: &SpoolGeometry,
    k3: &PhotonKinematics,
) -> Result<()> {
    let pairs = [
        ("radius", s1.radius, s3.radius),
        ("angular_speed", k1.angular_speed, k3.angular_speed),
        ("axial_speed", k1.axial_speed, k3.axial_speed),
        ("inclination", s1.inclination, s3.inclination),
        ("azimuth", s1.azimuth, s3.azimuth),
        ("latitude", s1.latitude, s3.latitude),
    ];
    for (field, a, b) in pairs {
        if !same(a, b) {
            return Err(Error::GeometryMismatch { field, a, b });
        }
    }
    Ok(())
}

/// `(2 pi c / lambda) (tau_1 - tau_3)` to first order in `epsilon`.
///
/// The two spools must share radius, angular and axial speed, inclination,
/// azimuth and latitude; they may differ in entry plane and fiber length.
pub fn rotation_phase(
    s1: &SpoolGeometry,
    k1: &PhotonKinematics,
    s3: &SpoolGeometry,
    k3: &PhotonKinematics,
    wavelength: f64,
    consts: &PhysicalConstants,
) -> Result<RotationPhase> {
    let b2 = validate_pair(s1, k1, consts)?;
    validate_pair(s3, k3, consts)?;
    positive(wavelength, "wavelength")?;
    check_shared(s1, k1, s3, k3)?;
    let c = consts.c;
    let g0inv = (1.0 - b2).sqrt();
    let omega = k1.angular_speed;
    let (a1, a3) = (s1.entry_plane, s3.entry_plane);
    let x1 = optical_phase(omega, k1.optical_length(), c) + a1;
    let x3 = optical_phase(omega, k3.optical_length(), c) + a3;
    // grouped per spool so that swapping the spools negates exactly
    let f = (x1.sin() - a1.sin()) - (x3.sin() - a3.sin());
    let fp = (x1.cos() - a1.cos()) - (x3.cos() - a3.cos());
    let pref = oscillation_prefactor(s1, wavelength, consts, b2);
    let (sx, cx) = s1.azimuth.sin_cos();
    let oscillating = -pref * (cx * f + s1.inclination.sin() * sx * fp);

    let (dl, dl_lo) = two_sum(k1.optical_length(), -k3.optical_length());
    let dl = dl + dl_lo;
    let k = TAU / wavelength;
    Ok(RotationPhase {
        linear: g0inv * k * dl,
        oscillating,
        secular: -k * dl / g0inv * secular_rate(s1, k1, consts, b2),
    })
}

/// `gamma0^-1 2 pi b R Omega cos(phi) / (lambda c)`
fn oscillation_prefactor(
    spool: &SpoolGeometry,
    wavelength: f64,
    consts: &PhysicalConstants,
    b2: f64,
) -> f64 {
    (1.0 - b2).sqrt()
        * TAU
        * spool.radius
        * consts.earth_radius
        * consts.earth_angular_speed
        * spool.latitude.cos()
        / (wavelength * consts.c)
}

/// Amplitude of the oscillating term, `gamma0^-1 2 pi b R Omega cos(phi) / (lambda c)`.
pub fn rotation_prefactor(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    wavelength: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let b2 = validate_pair(spool, kin, consts)?;
    positive(wavelength, "wavelength")?;
    Ok(oscillation_prefactor(spool, wavelength, consts, b2))
}

/// Oscillating term for `xi = n pi` and aligned entry planes,
/// `-cos(xi) gamma0^-1 (4 pi b R Omega / (lambda c)) cos(phi)
/// sin(omega dl / 2c) cos(omega l / 2c)`, with `dl = l1 - l3` and
/// `l = l1 + l3` formed exactly from the two optical lengths.
///
/// The `-cos(xi)` factor fixes the sign so that the result equals the
/// oscillating part of [`rotation_phase`]; its magnitude is independent of
/// `n`. The inclination drops out.
pub fn rotation_phase_oscillating(
    l1: f64,
    l3: f64,
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    wavelength: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let b2 = validate_pair(spool, kin, consts)?;
    positive(wavelength, "wavelength")?;
    positive(l1, "l1")?;
    positive(l3, "l3")?;
    let (d, s) = half_phases(kin.angular_speed, l1, l3, consts.c);
    let pref = oscillation_prefactor(spool, wavelength, consts, b2);
    Ok(-spool.azimuth.cos() * 2.0 * pref * d.sin() * s.cos())
}

/// Length over which `omega l / 2c` advances by `2 pi`: `4 pi c / omega`.
pub fn oscillation_period_optical(kin: &PhotonKinematics, c: f64) -> f64 {
    2.0 * TAU * c / kin.angular_speed
}

/// The same period measured as arc length on a spool of radius `b`: `4 pi b`.
pub fn oscillation_period_arc(radius: f64) -> f64 {
    2.0 * TAU * radius
}

/// Angle between exit planes for an optical mismatch `dl`: `omega dl / c`.
pub fn exit_plane_angle(delta_l: f64, kin: &PhotonKinematics, c: f64) -> f64 {
    kin.angular_speed * delta_l / c
}

/// `dl / b`, reading the mismatch directly as arc length on the spool.
pub fn arc_angle(delta_l: f64, radius: f64) -> f64 {
    delta_l / radius
}

/// Tolerance on the exit-plane alignment of the spools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentBound {
    /// Optical path mismatch at which the oscillating term reaches the
    /// gravitational phase.
    pub path_difference: f64,
    /// [`exit_plane_angle`] of `path_difference`.
    pub exit_plane_angle: f64,
    /// [`arc_angle`] of `path_difference`.
    pub arc_angle: f64,
    pub gravitational_phase: f64,
    /// `2 gamma0^-1 (2 pi b R Omega / (lambda c)) cos(phi)`
    pub amplitude: f64,
}

/// Smallest optical mismatch for which the oscillating rotation term can
/// equal the gravitational phase.
///
/// Uses the envelope `|cos(omega l / 2c)| = 1`: the total length drifts
/// thermally by many periods, so no particular value can be relied on.
/// Solved by bisection on the first monotone branch of the sine.
pub fn required_alignment(
    geometry: &InterferometerGeometry,
    fiber: &FiberOptical,
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
) -> Result<AlignmentBound> {
    let b2 = validate_pair(spool, kin, consts)?;
    let dphi = gravitational_phase(geometry, fiber, consts)?.abs();
    let c = consts.c;
    let amplitude = 2.0 * oscillation_prefactor(spool, fiber.wavelength, consts, b2).abs();
    if dphi >= amplitude {
        return Err(Error::NoSolution {
            fallback_bound: TAU * c / kin.angular_speed,
        });
    }
    let half_omega = kin.angular_speed / (2.0 * c);
    let upper = PI / (2.0 * half_omega);
    let dl = bisect(
        |x| amplitude * (half_omega * x).sin() - dphi,
        0.0,
        upper,
        1e-12 * upper,
    )?;
    Ok(AlignmentBound {
        path_difference: dl,
        exit_plane_angle: exit_plane_angle(dl, kin, c),
        arc_angle: arc_angle(dl, spool.radius),
        gravitational_phase: dphi,
        amplitude,
    })
}

/// Optical mismatch at which the linear term alone equals the
/// gravitational phase: `dphi_g lambda / (2 pi gamma0^-1)`.
pub fn linear_path_bound(
    geometry: &InterferometerGeometry,
    fiber: &FiberOptical,
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let b2 = validate_pair(spool, kin, consts)?;
    let dphi = gravitational_phase(geometry, fiber, consts)?.abs();
    Ok(dphi * fiber.wavelength / (TAU * (1.0 - b2).sqrt()))
}

/// Frame quantities of the vector formulation at time `t`.
///
/// `n` is the unit axis for which the lab velocity reads `R Omega l x n`;
/// with the eastward rotation of the matrix chain it points from the north
/// pole to the south pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameQuantities {
    /// `R Omega / c`
    pub epsilon: f64,
    pub gamma0: f64,
    pub beta0: f64,
    /// `(v_z / c) (l x n) . i`
    pub a1: f64,
    /// Amplitude of `(b omega / c) (l x n) . k(t)` over a turn.
    pub a2: f64,
    /// `(b omega / c) (l x n) . k(t)` at the requested time.
    pub a2_psi: f64,
    /// `b^2 omega / c^2`
    pub spin_coupling: f64,
}

impl FrameQuantities {
    /// `-eta(x', x_L') / c^2 = 1 - epsilon (a1 + a2 psi)` to first order.
    pub fn lab_overlap(&self) -> f64 {
        1.0 - self.epsilon * (self.a1 + self.a2_psi)
    }

    /// Relative Lorentz factor between photon and lab to first order, given
    /// `alpha1'` at the same time.
    pub fn relative_gamma(&self, alpha1_rate: f64) -> f64 {
        let g2 = self.gamma0 * self.gamma0;
        self.gamma0
            * (1.0
                + self.epsilon
                    * g2
                    * (self.spin_coupling * alpha1_rate
                        + self.beta0 * self.beta0 * (self.a1 + self.a2_psi)))
    }
}

pub fn frame_quantities(
    spool: &SpoolGeometry,
    kin: &PhotonKinematics,
    consts: &PhysicalConstants,
    t: f64,
) -> Result<FrameQuantities> {
    let b2 = validate_pair(spool, kin, consts)?;
    let c = consts.c;
    let m = spool_to_earth(spool);
    let i = mat_vec(&m, &[0.0, 0.0, 1.0]);
    let centre = earth_fixed_position(
        &m,
        &SpoolGeometry {
            radius: 0.0,
            ..*spool
        },
        &PhotonKinematics {
            axial_speed: 0.0,
            ..*kin
        },
        consts.earth_radius,
        0.0,
        0.0,
    );
    let norm = dot(&centre, &centre).sqrt();
    let ell = centre.map(|x| x / norm);
    let n = [0.0, 0.0, -1.0];
    let lxn = cross(&ell, &n);
    let alpha = spool.entry_plane + kin.angular_speed * t;
    let k = mat_vec(&m, &[-alpha.sin(), alpha.cos(), 0.0]);
    let bw = spool.radius * kin.angular_speed / c;
    let along = dot(&lxn, &i);
    let transverse = (dot(&lxn, &lxn) - along * along).max(0.0).sqrt();
    Ok(FrameQuantities {
        epsilon: consts.earth_radius * consts.earth_angular_speed / c,
        gamma0: 1.0 / (1.0 - b2).sqrt(),
        beta0: b2.sqrt(),
        a1: kin.axial_speed / c * along,
        a2: bw * transverse,
        a2_psi: bw * dot(&lxn, &k),
        spin_coupling: spool.radius * spool.radius * kin.angular_speed / (c * c),
    })
}
