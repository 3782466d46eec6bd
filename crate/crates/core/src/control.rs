//! Manifold-stabilizing and orbit-excitation control.
//!
//! The stabilizer cancels the effect of the slave displacement on the master
//! acceleration, so `theta` follows the reduced dynamics even off the
//! manifold, and drives `r` onto `X(theta, theta_dot)` with PD action on
//! `Delta = X - r`. The excitation term is a bang-bang torque on the master
//! inside a small angular window that steers the on-manifold energy into a
//! band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{energy_on_manifold, modal_dynamics, ManifoldCoeffs};
use crate::models::{Model2Dof, State2, R_MIN};
use crate::sim::{Controller, Trajectory};

const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    #[serde(default)]
    pub kappa_p: f64,
    pub kappa_d: f64,
}

impl Gains {
    pub fn damping(kappa_d: f64) -> Self {
        Self { kappa_p: 0.0, kappa_d }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_p >= 0.0 && self.kappa_d >= 0.0) {
            return Err(Error::InvalidArgument(format!("gains must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBand {
    pub e_lo: f64,
    pub e_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub gamma: f64,
}

impl EnergyBand {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_hi > self.e_lo && self.e_lo > 0.0 && self.x_hi > 0.0 && 0.0 > self.x_lo && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "band needs e_hi > e_lo > 0, x_hi > 0 > x_lo, gamma > 0: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn contains_energy(&self, e: f64) -> bool {
        (self.e_lo..=self.e_hi).contains(&e)
    }

    pub fn in_window(&self, theta: f64) -> bool {
        (self.x_lo..=self.x_hi).contains(&theta)
    }
}

/// Slave displacement from the manifold: `Delta = X - r`, `Delta_dot = Xdot - r_dot`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Displacement {
    pub delta: f64,
    pub ddelta: f64,
}

impl Displacement {
    pub fn of(c: &ManifoldCoeffs, s: &State2) -> Self {
        let (x, xd) = c.eval(s.q1, s.dq1);
        Self { delta: x - s.q2, ddelta: xd - s.dq2 }
    }

    pub fn norm(&self) -> f64 {
        self.delta.abs() + self.ddelta.abs()
    }
}

/// Slave stiffness `-df2/dr` and damping `-df2/dr_dot` on the manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaGamma {
    pub sigma: f64,
    pub gamma_damp: f64,
}

/// Finite-difference stiffness and damping at an arbitrary state.
pub fn sigma_gamma_fd<M: Model2Dof>(model: &M, s: &State2) -> SigmaGamma {
    let f2 = |r: f64, dr: f64| model.free_accel(&s.q1, &s.dq1, &r, &dr)[1];
    let h = FD_STEP;
    SigmaGamma {
        sigma: -(f2(s.q2 + h, s.dq2) - f2(s.q2 - h, s.dq2)) / (2.0 * h),
        gamma_damp: -(f2(s.q2, s.dq2 + h) - f2(s.q2, s.dq2 - h)) / (2.0 * h),
    }
}

pub fn sigma_gamma<M: Model2Dof>(model: &M, c: &ManifoldCoeffs, theta: f64, dtheta: f64) -> SigmaGamma {
    let s = c.lift(theta, dtheta);
    match model.slave_jacobian(&s) {
        Some((sigma, gamma_damp)) => SigmaGamma { sigma, gamma_damp },
        None => sigma_gamma_fd(model, &s),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractivenessReport {
    pub pass: bool,
    /// Smallest `Sigma + kappa_p` over the grid.
    pub min_stiffness: f64,
    /// Smallest `kappa_d + Gamma - bound` over the grid.
    pub worst_damping_margin: f64,
    /// `(theta, theta_dot)` where the damping margin is smallest.
    pub worst_state: (f64, f64),
}

/// Checks the scalar attractiveness conditions
/// `Sigma + kappa_p > 0` and `kappa_d + Gamma > -Sigma_dot / (Sigma + kappa_p)`
/// over a grid of on-manifold states with `|theta_dot| <= dtheta_max` and
/// `|theta| <= dtheta_max / omega`, `omega` being the linear angular
/// frequency. `Sigma_dot` is taken along the reduced dynamics.
pub fn check_attractiveness<M: Model2Dof>(
    model: &M,
    c: &ManifoldCoeffs,
    gains: &Gains,
    dtheta_max: f64,
) -> Result<AttractivenessReport> {
    const N: usize = 41;
    let eq = model.equilibrium()?;
    let omega2 = -crate::models::jacobian_fd(model, &eq, FD_STEP)[0][0];
    if !(omega2 > 0.0) {
        return Err(Error::InvalidArgument("upright equilibrium has no angular oscillation".into()));
    }
    let theta_max = dtheta_max / omega2.sqrt();
    let mut report = AttractivenessReport {
        pass: true,
        min_stiffness: f64::INFINITY,
        worst_damping_margin: f64::INFINITY,
        worst_state: (0.0, 0.0),
    };
    let sigma_at = |th: f64, dth: f64| sigma_gamma(model, c, th, dth);
    let h = FD_STEP;
    for i in 0..N {
        let th = theta_max * (2.0 * i as f64 / (N - 1) as f64 - 1.0);
        for j in 0..N {
            let dth = dtheta_max * (2.0 * j as f64 / (N - 1) as f64 - 1.0);
            let sg = sigma_at(th, dth);
            let k = sg.sigma + gains.kappa_p;
            report.min_stiffness = report.min_stiffness.min(k);
            // states where the manifold leaves the model domain count as failures
            let Ok(th_dd) = modal_dynamics(c, model, th, dth) else {
                report.worst_damping_margin = f64::NEG_INFINITY;
                report.worst_state = (th, dth);
                continue;
            };
            let ds_dth = (sigma_at(th + h, dth).sigma - sigma_at(th - h, dth).sigma) / (2.0 * h);
            let ds_ddth = (sigma_at(th, dth + h).sigma - sigma_at(th, dth - h).sigma) / (2.0 * h);
            let sigma_dot = ds_dth * dth + ds_ddth * th_dd;
            let margin = if k > 0.0 {
                gains.kappa_d + sg.gamma_damp + sigma_dot / k
            } else {
                f64::NEG_INFINITY
            };
            if margin < report.worst_damping_margin {
                report.worst_damping_margin = margin;
                report.worst_state = (th, dth);
            }
        }
    }
    report.pass = report.min_stiffness > 0.0 && report.worst_damping_margin > 0.0;
    Ok(report)
}

/// Master decoupling plus slave PD: `tau1 = f1(theta, theta_dot, X, Xdot) -
/// f1(theta, theta_dot, r, r_dot)`, `tau2 = kappa_p Delta + kappa_d Delta_dot`.
pub fn stabilizing_torque<M: Model2Dof>(model: &M, c: &ManifoldCoeffs, gains: &Gains, s: &State2) -> Result<[f64; 2]> {
    let (x, xd) = c.eval(s.q1, s.dq1);
    let on = model.master_accel(s.q1, s.dq1, x, xd)?;
    let here = model.master_accel(s.q1, s.dq1, s.q2, s.dq2)?;
    Ok([on - here, gains.kappa_p * (x - s.q2) + gains.kappa_d * (xd - s.dq2)])
}

/// Bang-bang energy pump on the master coordinate.
pub fn excitation_torque<M: Model2Dof>(model: &M, c: &ManifoldCoeffs, band: &EnergyBand, theta: f64, dtheta: f64) -> f64 {
    if !band.in_window(theta) {
        return 0.0;
    }
    let e = energy_on_manifold(c, model, theta, dtheta);
    if band.contains_energy(e) {
        0.0
    } else if (e < band.e_lo && dtheta > 0.0) || (e > band.e_hi && dtheta < 0.0) {
        band.gamma
    } else {
        -band.gamma
    }
}

pub fn combined_controller<M: Model2Dof>(
    model: &M,
    c: &ManifoldCoeffs,
    gains: &Gains,
    band: &EnergyBand,
    s: &State2,
) -> Result<[f64; 2]> {
    let [t1, t2] = stabilizing_torque(model, c, gains, s)?;
    Ok([t1 + excitation_torque(model, c, band, s.q1, s.dq1), t2])
}

/// Excitation on the master and slave damping only, no model-based
/// decoupling.
pub fn simplified_controller<M: Model2Dof>(model: &M, c: &ManifoldCoeffs, band: &EnergyBand, kappa_d: f64, s: &State2) -> [f64; 2] {
    let (_, xd) = c.eval(s.q1, s.dq1);
    [excitation_torque(model, c, band, s.q1, s.dq1), -kappa_d * (s.dq2 - xd)]
}

/// Torques a spring-free robot would need to follow the recorded motion,
/// with accelerations recomputed from `model` and the recorded inputs.
pub fn rigid_inverse_dynamics<M: Model2Dof>(traj: &Trajectory, model: &M) -> Result<Vec<[f64; 2]>> {
    let g = model.gravity();
    traj.states
        .iter()
        .zip(&traj.torques)
        .map(|(s, tau)| {
            let State2 { q1: th, dq1: dth, q2: r, dq2: dr } = *s;
            if !(r > R_MIN) {
                return Err(Error::Singularity(format!("radius {r} below {R_MIN}")));
            }
            let [th_dd, r_dd] = model.accel(s, *tau)?;
            Ok([th_dd + 2.0 * dr * dth / r - g * th.sin() / r, r_dd - r * dth * dth + g * th.cos()])
        })
        .collect()
}

/// Closed-loop laws bound to a model and a manifold, for use with
/// [`crate::sim::integrate`].
#[derive(Clone, Copy, Debug)]
pub enum Law<'a, M> {
    Stabilize { model: &'a M, coeffs: &'a ManifoldCoeffs, gains: Gains },
    Excite { model: &'a M, coeffs: &'a ManifoldCoeffs, gains: Gains, band: EnergyBand },
    Simplified { model: &'a M, coeffs: &'a ManifoldCoeffs, kappa_d: f64, band: EnergyBand },
}

impl<M: Model2Dof> Controller for Law<'_, M> {
    fn torque(&self, s: &State2) -> Result<[f64; 2]> {
        match *self {
            Law::Stabilize { model, coeffs, gains } => stabilizing_torque(model, coeffs, &gains, s),
            Law::Excite { model, coeffs, gains, band } => combined_controller(model, coeffs, &gains, &band, s),
            Law::Simplified { model, coeffs, kappa_d, band } => Ok(simplified_controller(model, coeffs, &band, kappa_d, s)),
        }
    }
}
