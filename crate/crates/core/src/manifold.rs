//! Polynomial Galerkin approximation of the angular-mode invariant manifold
//! `r = X(theta, theta_dot)`, `r_dot = Xdot(theta, theta_dot)`.
//!
//! The dynamics are Taylor-expanded to third order, the even fourth-order
//! ansatz is substituted into the two tangency constraints
//!
//! ```text
//! Xdot        = dX/dtheta    * theta_dot + dX/dtheta_dot    * f1(theta, theta_dot, X, Xdot)
//! f2(.., X, Xdot) = dXdot/dtheta * theta_dot + dXdot/dtheta_dot * f1(theta, theta_dot, X, Xdot)
//! ```
//!
//! and monomial coefficients in `(theta, theta_dot)` are matched up to degree
//! four, giving sixteen polynomial equations in the sixteen unknowns.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Model, Model2Dof, PendulumParams, State2};
use crate::poly::{MultiPoly, Ring};

/// Exponents `(theta, theta_dot)` of the ansatz monomials, in the order of
/// the coefficient names `*3, *4, *5, *10, *11, *12, *13, *14`.
pub const ANSATZ_MONOMIALS: [(u8, u8); 8] = [(2, 0), (1, 1), (0, 2), (4, 0), (1, 3), (2, 2), (3, 1), (0, 4)];

pub const COEFF_NAMES: [&str; 16] = [
    "a3", "a4", "a5", "a10", "a11", "a12", "a13", "a14", "b3", "b4", "b5", "b10", "b11", "b12", "b13", "b14",
];

/// Monomials matched in each constraint, highest power of `theta` first.
pub const MATCHED_MONOMIALS: [(u8, u8); 8] = [(4, 0), (3, 1), (2, 2), (2, 0), (1, 3), (1, 1), (0, 4), (0, 2)];

const NUM_UNKNOWNS: usize = 16;
const MISMATCH_TOL: f64 = 1e-9;

/// Radius about which the dynamics are Taylor-expanded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionCenter {
    /// Spring rest length; the series is re-centred on the equilibrium
    /// afterwards. Reproduces the reference coefficient tables.
    RestLength,
    /// The equilibrium radius itself; exact low-order coefficients.
    #[default]
    Equilibrium,
}

/// Third-order Taylor polynomials of `(f1, f2)` in the variables
/// `(theta, theta_dot, r - center, r_dot)`.
#[derive(Clone, Debug)]
pub struct PolyDynamics {
    pub theta_ddot: MultiPoly,
    pub r_ddot: MultiPoly,
    /// Radius the third variable is measured from.
    pub center: f64,
    pub r_eq: f64,
}

impl PolyDynamics {
    /// Same polynomials with the radial variable measured from `new_center`.
    pub fn recentered(&self, new_center: f64) -> PolyDynamics {
        let ring = self.theta_ddot.ring();
        let subs = [ring.var(0), ring.var(1), ring.var(2) + (new_center - self.center), ring.var(3)];
        PolyDynamics {
            theta_ddot: self.theta_ddot.compose(&subs),
            r_ddot: self.r_ddot.compose(&subs),
            center: new_center,
            r_eq: self.r_eq,
        }
    }

    pub fn eval(&self, s: &State2) -> [f64; 2] {
        let x = [s.q1, s.dq1, s.q2 - self.center, s.dq2];
        [self.theta_ddot.eval(&x), self.r_ddot.eval(&x)]
    }
}

pub fn taylor_expand<M: Model2Dof>(model: &M, center: ExpansionCenter, order: u32) -> Result<PolyDynamics> {
    let r_eq = model.r_eq()?;
    let rc = match center {
        ExpansionCenter::RestLength => model.rest_length(),
        ExpansionCenter::Equilibrium => r_eq,
    };
    model.check_domain(rc)?;
    let ring = Ring::truncated(4, order);
    let r = ring.var(2) + rc;
    let [th_dd, r_dd] = model.free_accel(&ring.var(0), &ring.var(1), &r, &ring.var(3));
    if !th_dd.all_finite() || !r_dd.all_finite() {
        return Err(Error::Singularity(format!("dynamics not analytic at r = {rc}")));
    }
    Ok(PolyDynamics { theta_ddot: th_dd, r_ddot: r_dd, center: rc, r_eq })
}

/// The sixteen matched-coefficient equations, as polynomials in the
/// unknowns ordered as [`COEFF_NAMES`].
#[derive(Clone, Debug)]
pub struct ResidualSystem {
    pub equations: Vec<MultiPoly>,
    jacobian: Vec<Vec<MultiPoly>>,
}

impl ResidualSystem {
    fn new(equations: Vec<MultiPoly>) -> Self {
        let jacobian = equations
            .iter()
            .map(|e| (0..NUM_UNKNOWNS).map(|j| e.derivative(j)).collect())
            .collect();
        Self { equations, jacobian }
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.equations.iter().map(|e| e.eval(z)))
    }

    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), NUM_UNKNOWNS, |i, j| self.jacobian[i][j].eval(z))
    }
}

/// Substitutes the ansatz into the tangency constraints and matches
/// coefficients. Fails if the dynamics produce monomials the ansatz cannot
/// balance.
pub fn build_residual_system(pd: &PolyDynamics) -> Result<ResidualSystem> {
    // (theta, theta_dot) graded up to degree 4, unknowns carried exactly.
    let ring = Ring::with_graded_prefix(2 + NUM_UNKNOWNS, 2, 4);
    let th = ring.var(0);
    let dth = ring.var(1);
    let ansatz = |offset: usize| {
        let mut p = ring.zero();
        for (k, &(i, j)) in ANSATZ_MONOMIALS.iter().enumerate() {
            let mut e = vec![0u8; ring.nvars];
            e[0] = i;
            e[1] = j;
            e[2 + offset + k] = 1;
            p = &p + &ring.monomial(&e, 1.0);
        }
        p
    };
    let x_tilde = ansatz(0); // X - r_eq
    let xdot = ansatz(8);

    let subs = [th.clone(), dth.clone(), x_tilde.clone() + (pd.r_eq - pd.center), xdot.clone()];
    let f1 = pd.theta_ddot.compose(&subs);
    let f2 = pd.r_ddot.compose(&subs);

    let r1 = &xdot - &(&(&x_tilde.derivative(0) * &dth) + &(&x_tilde.derivative(1) * &f1));
    let r2 = &f2 - &(&(&xdot.derivative(0) * &dth) + &(&xdot.derivative(1) * &f1));

    let coeff_ring = Ring::free(NUM_UNKNOWNS);
    let mut equations = Vec::with_capacity(NUM_UNKNOWNS);
    for (label, r) in [("first", r1), ("second", r2)] {
        let mut groups: BTreeMap<Vec<u8>, MultiPoly> = r.split_graded(coeff_ring);
        for &(i, j) in &MATCHED_MONOMIALS {
            equations.push(groups.remove(&vec![i, j]).unwrap_or_else(|| coeff_ring.zero()));
        }
        if let Some((e, p)) = groups.iter().find(|(_, p)| p.max_abs_coeff() > MISMATCH_TOL) {
            return Err(Error::AnsatzMismatch(format!(
                "{label} constraint has an unmatched theta^{} theta_dot^{} term: {p:?}",
                e[0], e[1]
            )));
        }
    }
    Ok(ResidualSystem::new(equations))
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub center: ExpansionCenter,
    pub tol: f64,
    pub max_iter: usize,
    /// Initial continuation step of the homotopy fallback.
    pub homotopy_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { center: ExpansionCenter::Equilibrium, tol: 1e-12, max_iter: 200, homotopy_step: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub z: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub used_homotopy: bool,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on `F(z) - shift = 0`.
fn newton(sys: &ResidualSystem, z0: &[f64], shift: &DVector<f64>, tol: f64, max_iter: usize) -> Result<NewtonReport> {
    let mut z = DVector::from_column_slice(z0);
    let mut f = sys.eval(z.as_slice()) - shift;
    let mut norm = inf_norm(&f);
    for it in 0..max_iter {
        if !norm.is_finite() {
            break;
        }
        if norm < tol {
            return Ok(NewtonReport { z: z.as_slice().to_vec(), residual_inf: norm, iterations: it, used_homotopy: false });
        }
        let jac = sys.jacobian(z.as_slice());
        let Some(step) = jac.lu().solve(&(-&f)) else { break };
        let mut alpha = 1.0;
        loop {
            let trial = &z + &step * alpha;
            let ft = sys.eval(trial.as_slice()) - shift;
            let nt = inf_norm(&ft);
            if nt.is_finite() && (nt < (1.0 - 1e-4 * alpha) * norm || alpha < 1e-3 && nt < norm) {
                z = trial;
                f = ft;
                norm = nt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                // no descent; accept the full step once more only if it is finite
                return Err(Error::NewtonDiverged { iterations: it, residual: norm });
            }
        }
    }
    if norm < tol {
        return Ok(NewtonReport { z: z.as_slice().to_vec(), residual_inf: norm, iterations: max_iter, used_homotopy: false });
    }
    Err(Error::NewtonDiverged { iterations: max_iter, residual: norm })
}

/// Newton from `z0`; on failure, follows `F(z) = (1 - lambda) F(z0)` from
/// `lambda = 0` to 1.
pub fn solve_residual_system(sys: &ResidualSystem, z0: &[f64], opts: &SolveOptions) -> Result<NewtonReport> {
    let zero = DVector::zeros(sys.len());
    let direct = newton(sys, z0, &zero, opts.tol, opts.max_iter);
    let first_err = match direct {
        Ok(r) => return Ok(r),
        Err(e) => e,
    };
    let f0 = sys.eval(z0);
    let mut z = z0.to_vec();
    let mut lambda = 0.0;
    let mut step = opts.homotopy_step;
    let mut total = 0;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let shift = &f0 * (1.0 - next);
        let tol = if next < 1.0 { opts.tol.max(1e-10) } else { opts.tol };
        match newton(sys, &z, &shift, tol, opts.max_iter) {
            Ok(r) => {
                total += r.iterations;
                z = r.z;
                lambda = next;
                step = (step * 1.5).min(opts.homotopy_step);
            }
            Err(_) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(first_err);
                }
            }
        }
    }
    let residual_inf = inf_norm(&sys.eval(&z));
    Ok(NewtonReport { z, residual_inf, iterations: total, used_homotopy: true })
}

/// Coefficients of the manifold maps together with the model they belong to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCoeffs {
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a10: f64,
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
    pub a14: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub b10: f64,
    pub b11: f64,
    pub b12: f64,
    pub b13: f64,
    pub b14: f64,
    pub r_eq: f64,
    pub params: Model,
    #[serde(default)]
    pub center: ExpansionCenter,
}

/// Values and first partials of the maps at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldJet {
    pub x: f64,
    pub xdot: f64,
    pub dx_dtheta: f64,
    pub dx_ddtheta: f64,
    pub dxdot_dtheta: f64,
    pub dxdot_ddtheta: f64,
}

impl ManifoldCoeffs {
    pub fn from_vec(z: &[f64], r_eq: f64, params: Model, center: ExpansionCenter) -> Self {
        assert_eq!(z.len(), NUM_UNKNOWNS);
        Self {
            a3: z[0],
            a4: z[1],
            a5: z[2],
            a10: z[3],
            a11: z[4],
            a12: z[5],
            a13: z[6],
            a14: z[7],
            b3: z[8],
            b4: z[9],
            b5: z[10],
            b10: z[11],
            b11: z[12],
            b12: z[13],
            b13: z[14],
            b14: z[15],
            r_eq,
            params,
            center,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.a3, self.a4, self.a5, self.a10, self.a11, self.a12, self.a13, self.a14, self.b3, self.b4, self.b5,
            self.b10, self.b11, self.b12, self.b13, self.b14,
        ]
    }

    /// Flat manifold through the equilibrium (`X = r_eq`, `Xdot = 0`).
    pub fn trivial(r_eq: f64, params: Model) -> Self {
        Self::from_vec(&[0.0; NUM_UNKNOWNS], r_eq, params, ExpansionCenter::default())
    }

    pub fn eval(&self, theta: f64, dtheta: f64) -> (f64, f64) {
        let j = self.jet(theta, dtheta);
        (j.x, j.xdot)
    }

    pub fn jet(&self, theta: f64, dtheta: f64) -> ManifoldJet {
        let z = self.to_vec();
        let mut out = ManifoldJet { x: self.r_eq, xdot: 0.0, dx_dtheta: 0.0, dx_ddtheta: 0.0, dxdot_dtheta: 0.0, dxdot_ddtheta: 0.0 };
        for (k, &(i, j)) in ANSATZ_MONOMIALS.iter().enumerate() {
            let (i, j) = (i as i32, j as i32);
            let m = theta.powi(i) * dtheta.powi(j);
            let m_th = if i > 0 { i as f64 * theta.powi(i - 1) * dtheta.powi(j) } else { 0.0 };
            let m_dth = if j > 0 { j as f64 * theta.powi(i) * dtheta.powi(j - 1) } else { 0.0 };
            out.x += z[k] * m;
            out.dx_dtheta += z[k] * m_th;
            out.dx_ddtheta += z[k] * m_dth;
            out.xdot += z[k + 8] * m;
            out.dxdot_dtheta += z[k + 8] * m_th;
            out.dxdot_ddtheta += z[k + 8] * m_dth;
        }
        out
    }

    /// Point on the manifold above `(theta, theta_dot)`.
    pub fn lift(&self, theta: f64, dtheta: f64) -> State2 {
        let (x, xd) = self.eval(theta, dtheta);
        State2::new(theta, dtheta, x, xd)
    }
}

pub fn eval_manifold(c: &ManifoldCoeffs, theta: f64, dtheta: f64) -> (f64, f64) {
    c.eval(theta, dtheta)
}

/// Residuals of the exact (untruncated) tangency constraints at a point.
pub fn tangency_residual<M: Model2Dof>(model: &M, c: &ManifoldCoeffs, theta: f64, dtheta: f64) -> Result<[f64; 2]> {
    let j = c.jet(theta, dtheta);
    model.check_domain(j.x)?;
    let [f1, f2] = model.free_accel(&theta, &dtheta, &j.x, &j.xdot);
    Ok([
        j.xdot - (j.dx_dtheta * dtheta + j.dx_ddtheta * f1),
        f2 - (j.dxdot_dtheta * dtheta + j.dxdot_ddtheta * f1),
    ])
}

#[derive(Clone, Debug)]
pub struct ManifoldSolution {
    pub coeffs: ManifoldCoeffs,
    pub system: ResidualSystem,
    pub report: NewtonReport,
}

/// Expands, builds and solves the Galerkin system for `model`.
pub fn solve_manifold(model: &Model, opts: &SolveOptions) -> Result<ManifoldSolution> {
    model.validate()?;
    let pd = taylor_expand(model, opts.center, 3)?;
    let system = build_residual_system(&pd)?;
    let report = solve_residual_system(&system, &[0.0; NUM_UNKNOWNS], opts)?;
    let coeffs = ManifoldCoeffs::from_vec(&report.z, pd.r_eq, *model, opts.center);
    Ok(ManifoldSolution { coeffs, system, report })
}

/// Reduced master dynamics: `f1` evaluated on the manifold.
pub fn modal_dynamics<M: Model2Dof>(c: &ManifoldCoeffs, model: &M, theta: f64, dtheta: f64) -> Result<f64> {
    let (x, xd) = c.eval(theta, dtheta);
    model.master_accel(theta, dtheta, x, xd)
}

pub fn energy_on_manifold<M: Model2Dof>(c: &ManifoldCoeffs, model: &M, theta: f64, dtheta: f64) -> f64 {
    model.energy(&c.lift(theta, dtheta))
}

/// Auxiliary constants of the rest-length pendulum equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DCoeffs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
    pub d7: f64,
}

impl DCoeffs {
    /// `d1..d4` from the parameters; `d5..d7` from the low-order unknowns
    /// `(a3, a4, a5, b3, b4)`.
    pub fn new(p: &PendulumParams, low: [f64; 5]) -> Self {
        let PendulumParams { kappa1: k1, kappa2: k2, g, r0 } = *p;
        let d1 = g * (1.0 / r0 + g / (k2 * r0 * r0) + g * g / (k2 * k2 * r0.powi(3)))
            - k1 * (1.0 / (r0 * r0) + 2.0 * g / (k2 * r0.powi(3)) + 3.0 * g * g / (k2 * k2 * r0.powi(4)));
        let d2 = 1.0 / (r0 * r0) + 2.0 * g / (k2 * r0.powi(3));
        let d3 = 1.0 / r0 + g / (k2 * r0 * r0);
        let d4 = 2.0 / r0.powi(3) + 6.0 * g / (k2 * r0.powi(4));
        let [a3, a4, a5, b3, b4] = low;
        Self {
            d1,
            d2,
            d3,
            d4,
            d5: 2.0 * b3 * d3 + g * a4 * d2 - k1 * a4 * d4,
            d6: g * a3 * d2 - k1 * a3 * d4 + g / (6.0 * r0),
            d7: 2.0 * b4 * d3 + g * a5 * d2 - k1 * a5 * d4,
        }
    }

    pub fn from_coeffs(p: &PendulumParams, c: &ManifoldCoeffs) -> Self {
        Self::new(p, [c.a3, c.a4, c.a5, c.b3, c.b4])
    }
}

/// Closed-form coefficients printed for `r0 = 1`, `g = 9.81`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormCoeffs {
    pub a3: f64,
    pub a5: f64,
    pub a12: f64,
    pub a14: f64,
}

pub fn closed_form_coeffs(kappa1: f64, kappa2: f64) -> Result<ClosedFormCoeffs> {
    let p = PendulumParams { kappa1, kappa2, g: 9.81, r0: 1.0 };
    p.validate()?;
    let DCoeffs { d1, d2, d3, d4, .. } = DCoeffs::new(&p, [0.0; 5]);
    let (k1, k2) = (kappa1, kappa2);

    let alpha3 = 5.0 * (-400.0 * d1 * d1 * k2 + 3.9e3 * d1 * d1 + 2e3 * d1 * k2 + 999.0 * k2 * k2);
    let gamma3 = 1e3 * k2 * k2 * (4.0 * d1 + k2);
    let alpha5 = -20.0 * d1 + 20.0 * k2 - 2.0 * d1 * k2 - k2 * k2;
    let gamma5 = k2 * k2 * (4.0 * d1 + k2);

    let p2 = |x: f64| x * x;
    let p3 = |x: f64| x * x * x;
    let p4 = |x: f64| x.powi(4);
    let p5 = |x: f64| x.powi(5);
    let alpha12 = 1.2e5 * p3(d1) * d2 - 2.7e3 * d1 * p3(k2) + 144.0 * d1 * p4(k2) - 2.6e4 * d2 * p3(k2)
        + 2.5e3 * p4(d1) * k2
        + 788.0 * d2 * p4(k2)
        + 399.0 * d3 * p4(k2)
        - 788.0 * p4(k2)
        + 29.0 * p5(k2)
        + 1.5e3 * p2(d1) * p2(k2)
        + 688.0 * p2(d1) * p3(k2)
        + 3e3 * p3(d1) * p2(k2)
        - 28.0 * p2(d1) * p4(k2)
        - 199.0 * p3(d1) * p3(k2)
        - 277.0 * p4(d1) * p2(k2)
        - 9.2e3 * p2(d1) * d2 * p2(k2)
        + 488.0 * p2(d1) * d2 * p3(k2)
        + 1.3e3 * p3(d1) * d2 * p2(k2)
        - 633.0 * p2(d1) * d3 * p3(k2)
        - 3.1e3 * p3(d1) * d3 * p2(k2)
        + 64.0 * p2(d1) * d3 * p4(k2)
        + 177.0 * p3(d1) * d3 * p3(k2)
        + 4.5e4 * p2(d1) * d2 * k2
        - 4.6e3 * d1 * d2 * p3(k2)
        - 2.5e4 * p3(d1) * d2 * k2
        + 177.0 * d1 * d2 * p4(k2)
        - 4.6e3 * d1 * d3 * p3(k2)
        + 1.5e4 * p3(d1) * d3 * k2
        - 1.2e4 * p3(d1) * d4 * k1
        + 400.0 * d1 * d3 * p4(k2)
        + 2.7e3 * d4 * k1 * p3(k2)
        - 78.0 * d4 * k1 * p4(k2)
        - 4.6e3 * p2(d1) * d4 * k1 * k2
        + 488.0 * d1 * d4 * k1 * p3(k2)
        + 2.5e3 * p3(d1) * d4 * k1 * k2
        - 16.0 * d1 * d4 * k1 * p4(k2)
        + 944.0 * p2(d1) * d4 * k1 * p2(k2)
        - 48.0 * p2(d1) * d4 * k1 * p3(k2)
        - 133.0 * p3(d1) * d4 * k1 * p2(k2);
    let gamma12 = 2.0 * p4(k2) * p2(4.0 * d1 + k2) * (16.0 * d1 + k2);

    let alpha14 = 2e5 * p2(d1) * d2 + 9.2e3 * p3(d1) * d3 + 2.7e3 * d1 * p2(k2) - 1.5e3 * p2(d1) * k2
        - 566.0 * d1 * p3(k2)
        + 3.4e4 * d2 * p2(k2)
        - 4.2e3 * p3(d1) * k2
        + 22.0 * d1 * p4(k2)
        - 1.5e3 * d2 * p3(k2)
        + 277.0 * p4(d1) * k2
        + 20.0 * d2 * p4(k2)
        - 1.2e3 * d3 * p3(k2)
        + 39.0 * d3 * p4(k2)
        - 2.5e3 * p4(d1)
        + 788.0 * p3(k2)
        - 49.0 * p4(k2)
        + p5(k2)
        - 2.3e3 * p2(d1) * p2(k2)
        + 133.0 * p2(d1) * p3(k2)
        + 300.0 * p3(d1) * p2(k2)
        + 877.0 * p2(d1) * d2 * p2(k2)
        - 2.2e3 * p2(d1) * d3 * p2(k2)
        + 80.0 * p2(d1) * d3 * p3(k2)
        + 96.0 * p3(d1) * d3 * p2(k2)
        + 1.4e5 * d1 * d2 * k2
        - 1e4 * d1 * d2 * p2(k2)
        - 2.9e4 * p2(d1) * d2 * k2
        + 244.0 * d1 * d2 * p3(k2)
        - 6.9e3 * d1 * d3 * p2(k2)
        + 1.4e4 * p2(d1) * d3 * k2
        - 2.1e4 * p2(d1) * d4 * k1
        + 78.0 * d1 * d3 * p3(k2)
        - 1.9e3 * p3(d1) * d3 * k2
        + 8.0 * d1 * d3 * p4(k2)
        - 3.5e3 * d4 * k1 * p2(k2)
        + 177.0 * d4 * k1 * p3(k2)
        - 2.0 * d4 * k1 * p4(k2)
        + 1e3 * d1 * d4 * k1 * p2(k2)
        + 3e3 * p2(d1) * d4 * k1 * k2
        - 24.0 * d1 * d4 * k1 * p3(k2)
        - 88.0 * p2(d1) * d4 * k1 * p2(k2)
        - 1.4e4 * d1 * d4 * k1 * k2;
    let gamma14 = p3(k2) * p2(4.0 * d1 + k2) * (64.0 * p2(d1) + 20.0 * d1 * k2 + p2(k2));

    let ratio = |name: &str, alpha: f64, gamma: f64, scale: f64| {
        if gamma.abs() <= 1e-12 * scale {
            Err(Error::DegenerateDenominator(format!("gamma for {name}")))
        } else {
            Ok(-alpha / gamma)
        }
    };
    Ok(ClosedFormCoeffs {
        a3: ratio("a3", alpha3, gamma3, 1e3 * p3(k2))?,
        a5: ratio("a5", alpha5, gamma5, p3(k2))?,
        a12: ratio("a12", alpha12, gamma12, 2.0 * p5(k2) * k2)?,
        a14: ratio("a14", alpha14, gamma14, p3(k2) * p4(k2))?,
    })
}
