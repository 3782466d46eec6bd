//! Planar two-degree-of-freedom compliant systems in polar coordinates
//! `(theta, r)` about a foot or pivot: the elastic inverted pendulum and the
//! two-link segmented leg. All quantities are per unit mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest admissible radius before the polar equations are considered
/// singular.
pub const R_MIN: f64 = 1e-3;
/// Margin kept from the fully stretched leg, `r = 2a`.
pub const LEG_STRETCH_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    /// Master position (`theta`).
    pub q1: f64,
    pub dq1: f64,
    /// Slave position (`r`).
    pub q2: f64,
    pub dq2: f64,
}

impl State2 {
    pub const fn new(q1: f64, dq1: f64, q2: f64, dq2: f64) -> Self {
        Self { q1, dq1, q2, dq2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.dq1, self.q2, self.dq2]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self::new(y[0], y[1], y[2], y[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Mirror image `(-theta, -theta_dot, r, r_dot)`.
    pub fn mirrored(self) -> Self {
        Self::new(-self.q1, -self.dq1, self.q2, self.dq2)
    }
}

/// Common contract for the 2-DoF systems handled by the manifold and control
/// code: `q1'' = f1 + tau1`, `q2'' = f2 + tau2`.
pub trait Model2Dof: Send + Sync {
    /// Conservative accelerations `(f1, f2)`, written once for `f64` and for
    /// truncated Taylor polynomials.
    fn free_accel<S: Scalar>(&self, theta: &S, dtheta: &S, r: &S, dr: &S) -> [S; 2];

    fn energy(&self, s: &State2) -> f64;

    fn gravity(&self) -> f64;

    /// Spring rest radius.
    fn rest_length(&self) -> f64;

    /// Radius of the upright equilibrium.
    fn r_eq(&self) -> Result<f64>;

    fn check_domain(&self, r: f64) -> Result<()>;

    /// Viscous coefficient applied to both velocities (zero for the ideal
    /// plant).
    fn viscous(&self) -> f64 {
        0.0
    }

    /// Closed-form slave stiffness and damping `(-df2/dr, -df2/dr')`, when
    /// available.
    fn slave_jacobian(&self, _s: &State2) -> Option<(f64, f64)> {
        None
    }

    fn accel(&self, s: &State2, tau: [f64; 2]) -> Result<[f64; 2]> {
        self.check_domain(s.q2)?;
        let [f1, f2] = self.free_accel(&s.q1, &s.dq1, &s.q2, &s.dq2);
        let c = self.viscous();
        Ok([f1 - c * s.dq1 + tau[0], f2 - c * s.dq2 + tau[1]])
    }

    fn equilibrium(&self) -> Result<State2> {
        Ok(State2::new(0.0, 0.0, self.r_eq()?, 0.0))
    }

    /// Evaluates `f1` only, as used by the decoupling term and the reduced
    /// dynamics.
    fn master_accel(&self, theta: f64, dtheta: f64, r: f64, dr: f64) -> Result<f64> {
        self.check_domain(r)?;
        Ok(self.free_accel(&theta, &dtheta, &r, &dr)[0])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub g: f64,
    pub r0: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self { kappa1: 20.0, kappa2: 60.0, g: 9.81, r0: 1.0 }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.kappa1, self.kappa2, self.g, self.r0].iter().all(|v| v.is_finite());
        if !all_finite || self.kappa2 <= 0.0 || self.kappa1 < 0.0 || self.r0 <= self.g / self.kappa2 {
            return Err(Error::InvalidArgument(format!(
                "pendulum parameters need kappa2 > 0, kappa1 >= 0, r0 > g/kappa2: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Model2Dof for PendulumParams {
    fn free_accel<S: Scalar>(&self, theta: &S, dtheta: &S, r: &S, dr: &S) -> [S; 2] {
        let inv_r = r.recip();
        let th_dd = -(dr.clone() * dtheta.clone() * inv_r.clone() * 2.0) + theta.sin() * inv_r.clone() * self.g
            - theta.clone() * inv_r.square() * self.kappa1;
        let r_dd = r.clone() * dtheta.square() - theta.cos() * self.g - (r.clone() - self.r0) * self.kappa2;
        [th_dd, r_dd]
    }

    fn energy(&self, s: &State2) -> f64 {
        let State2 { q1: th, dq1: dth, q2: r, dq2: dr } = *s;
        0.5 * (r * r * dth * dth + dr * dr)
            + 0.5 * (self.kappa1 * th * th + self.kappa2 * (r - self.r0).powi(2))
            + self.g * r * th.cos()
    }

    fn gravity(&self) -> f64 {
        self.g
    }

    fn rest_length(&self) -> f64 {
        self.r0
    }

    fn r_eq(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.r0 - self.g / self.kappa2)
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(r > R_MIN) {
            return Err(Error::Singularity(format!("radius {r} below {R_MIN}")));
        }
        Ok(())
    }

    fn slave_jacobian(&self, s: &State2) -> Option<(f64, f64)> {
        Some((self.kappa2 - s.dq1 * s.dq1, 0.0))
    }
}

pub fn pendulum_accel(s: &State2, tau: [f64; 2], p: &PendulumParams) -> Result<[f64; 2]> {
    p.accel(s, tau)
}

pub fn pendulum_energy(s: &State2, p: &PendulumParams) -> f64 {
    p.energy(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegParams {
    /// Length of each of the two links.
    pub a: f64,
    /// Stiffness of both joint springs.
    pub kappa: f64,
    pub g: f64,
    pub r0: f64,
    /// Viscous loss on both polar velocities.
    #[serde(default)]
    pub damping: f64,
}

impl Default for LegParams {
    fn default() -> Self {
        Self { a: 0.25, kappa: 40.0, g: 9.81, r0: 0.4, damping: 0.0 }
    }
}

/// Knee angle `rho(r) = acos(1 - r^2 / (2 a^2))`.
pub fn knee_angle<S: Scalar>(r: &S, a: f64) -> S {
    (r.square() * (-0.5 / (a * a)) + 1.0).acos()
}

impl LegParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.a, self.kappa, self.g, self.r0, self.damping].iter().all(|v| v.is_finite());
        if !all_finite || self.a <= 0.0 || self.kappa <= 0.0 || self.damping < 0.0 || !(self.r0 > 0.0 && self.r0 < 2.0 * self.a) {
            return Err(Error::InvalidArgument(format!(
                "leg parameters need a > 0, kappa > 0, damping >= 0, 0 < r0 < 2a: {self:?}"
            )));
        }
        Ok(())
    }

    fn radial_static(&self, r: f64) -> f64 {
        let [_, f2] = self.free_accel(&0.0, &0.0, &r, &0.0);
        f2
    }
}

impl Model2Dof for LegParams {
    fn free_accel<S: Scalar>(&self, theta: &S, dtheta: &S, r: &S, dr: &S) -> [S; 2] {
        let inv_r = r.recip();
        let th_dd = -(dr.clone() * dtheta.clone() * inv_r.clone() * 2.0) + theta.sin() * inv_r.clone() * self.g
            - theta.clone() * inv_r.square() * (2.0 * self.kappa);
        let rho0 = knee_angle(&self.r0, self.a);
        let spring = (knee_angle(r, self.a) - rho0) * (r.square() * -1.0 + 4.0 * self.a * self.a).sqrt().recip();
        let r_dd = r.clone() * dtheta.square() - theta.cos() * self.g - spring * self.kappa;
        [th_dd, r_dd]
    }

    fn energy(&self, s: &State2) -> f64 {
        let State2 { q1: th, dq1: dth, q2: r, dq2: dr } = *s;
        let drho = knee_angle(&r, self.a) - knee_angle(&self.r0, self.a);
        0.5 * (r * r * dth * dth + dr * dr) + self.kappa * th * th + 0.25 * self.kappa * drho * drho + self.g * r * th.cos()
    }

    fn gravity(&self) -> f64 {
        self.g
    }

    fn rest_length(&self) -> f64 {
        self.r0
    }

    /// Bisection on the static radial balance between `R_MIN` and `r0`.
    fn r_eq(&self) -> Result<f64> {
        self.validate()?;
        let mut lo = R_MIN;
        let mut hi = self.r0;
        if self.radial_static(lo) <= 0.0 {
            return Err(Error::InvalidArgument(format!("leg spring too weak to hold the body: {self:?}")));
        }
        // f(lo) > 0 >= f(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.radial_static(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = if self.radial_static(lo).abs() < self.radial_static(hi).abs() { lo } else { hi };
        Ok(r)
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(r > R_MIN && r < 2.0 * self.a - LEG_STRETCH_EPS) {
            return Err(Error::Singularity(format!(
                "radius {r} outside ({R_MIN}, {})",
                2.0 * self.a - LEG_STRETCH_EPS
            )));
        }
        Ok(())
    }

    fn viscous(&self) -> f64 {
        self.damping
    }
}

pub fn leg_accel(s: &State2, tau: [f64; 2], p: &LegParams) -> Result<[f64; 2]> {
    p.accel(s, tau)
}

/// Joint angles to polar coordinates of the hip over the foot.
pub fn leg_coords(q1: f64, q2: f64, a: f64) -> Result<(f64, f64)> {
    let r = a * (2.0 * (1.0 + (q1 - q2).cos())).max(0.0).sqrt();
    if (q1 - q2).abs() >= std::f64::consts::PI || r <= R_MIN {
        return Err(Error::Singularity(format!("folded leg: q1 - q2 = {}", q1 - q2)));
    }
    Ok((0.5 * (q1 + q2), r))
}

/// Inverse of [`leg_coords`] on the branch `q1 >= q2`.
pub fn leg_joints(theta: f64, r: f64, a: f64) -> Result<(f64, f64)> {
    if !(r > R_MIN && r < 2.0 * a) {
        return Err(Error::Singularity(format!("radius {r} unreachable with link length {a}")));
    }
    let half = 0.5 * (std::f64::consts::PI - knee_angle(&r, a));
    Ok((theta + half, theta - half))
}

/// Runtime choice between the supported plants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Pendulum(PendulumParams),
    Leg(LegParams),
}

impl Default for Model {
    fn default() -> Self {
        Model::Pendulum(PendulumParams::default())
    }
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Pendulum(p) => p.validate(),
            Model::Leg(p) => p.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Pendulum(_) => "pendulum",
            Model::Leg(_) => "leg",
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Model::Pendulum($p) => $e,
            Model::Leg($p) => $e,
        }
    };
}

impl Model2Dof for Model {
    fn free_accel<S: Scalar>(&self, theta: &S, dtheta: &S, r: &S, dr: &S) -> [S; 2] {
        dispatch!(self, p => p.free_accel(theta, dtheta, r, dr))
    }
    fn energy(&self, s: &State2) -> f64 {
        dispatch!(self, p => p.energy(s))
    }
    fn gravity(&self) -> f64 {
        dispatch!(self, p => p.gravity())
    }
    fn rest_length(&self) -> f64 {
        dispatch!(self, p => p.rest_length())
    }
    fn r_eq(&self) -> Result<f64> {
        dispatch!(self, p => p.r_eq())
    }
    fn check_domain(&self, r: f64) -> Result<()> {
        dispatch!(self, p => p.check_domain(r))
    }
    fn viscous(&self) -> f64 {
        dispatch!(self, p => p.viscous())
    }
    fn slave_jacobian(&self, s: &State2) -> Option<(f64, f64)> {
        dispatch!(self, p => p.slave_jacobian(s))
    }
}

/// Central-difference Jacobian of the conservative accelerations with respect
/// to `(theta, theta_dot, r, r_dot)`; row `i` is `d f_i`.
pub fn jacobian_fd<M: Model2Dof>(model: &M, s: &State2, h: f64) -> [[f64; 4]; 2] {
    let y = s.to_array();
    let mut out = [[0.0; 4]; 2];
    for j in 0..4 {
        let mut yp = y;
        let mut ym = y;
        yp[j] += h;
        ym[j] -= h;
        let fp = model.free_accel(&yp[0], &yp[1], &yp[2], &yp[3]);
        let fm = model.free_accel(&ym[0], &ym[1], &ym[2], &ym[3]);
        for i in 0..2 {
            out[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}
