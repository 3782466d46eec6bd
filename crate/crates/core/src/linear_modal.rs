//! Modal analysis of `M x'' = -K x + tau` and the eigenspace-stabilizing
//! damping feedback.
//!
//! Mode shapes come from the generalized symmetric problem `K v = lambda M v`
//! solved through a Cholesky factor of `M`, so the columns of `V` are
//! M-orthonormal (`V^T M V = I`). Modal coordinates of a configuration are
//! then `V^T M x`, and the damping gain acting on every eigenspace except the
//! selected one is `G = beta (P V^T M)^T (P V^T M)`.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rk4::{step_count, Rk4};
use crate::sim::SimSettings;

const SYMMETRY_TOL: f64 = 1e-12;
const MULTIPLICITY_GAP: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LinearSystem {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl LinearSystem {
    pub fn new(mass: DMatrix<f64>, stiffness: DMatrix<f64>) -> Result<Self> {
        let n = mass.nrows();
        if !mass.is_square() || !stiffness.is_square() || stiffness.nrows() != n || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "mass {}x{} and stiffness {}x{} must be square and of equal size",
                mass.nrows(),
                mass.ncols(),
                stiffness.nrows(),
                stiffness.ncols()
            )));
        }
        check_spd(&mass, "M")?;
        check_spd(&stiffness, "K")?;
        let chol = Cholesky::new(mass.clone()).ok_or(Error::NotSpd("M"))?;
        Ok(Self { mass, stiffness, chol })
    }

    /// Two bodies on a line: spring `k1` to ground, spring `k2` between them.
    pub fn two_mass(m1: f64, m2: f64, k1: f64, k2: f64) -> Result<Self> {
        let mass = DMatrix::from_row_slice(2, 2, &[m1, 0.0, 0.0, m2]);
        let stiffness = DMatrix::from_row_slice(2, 2, &[k1 + k2, -k2, -k2, k2]);
        Self::new(mass, stiffness)
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn energy(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.mass * v)) + 0.5 * x.dot(&(&self.stiffness * x))
    }

    /// `M^{-1} (-K x + tau)`.
    pub fn accel(&self, x: &DVector<f64>, tau: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(&(tau - &self.stiffness * x))
    }
}

fn check_spd(a: &DMatrix<f64>, name: &'static str) -> Result<()> {
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSpd(name));
    }
    Cholesky::new(a.clone()).map(|_| ()).ok_or(Error::NotSpd(name))
}

#[derive(Clone, Debug)]
pub struct ModalDecomposition {
    /// Mode shapes as columns, M-orthonormal, ascending eigenvalue.
    pub vectors: DMatrix<f64>,
    pub lambdas: Vec<f64>,
    /// Column ranges sharing one eigenvalue.
    pub groups: Vec<Range<usize>>,
}

impl ModalDecomposition {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.groups.len()
    }
}

pub fn modal_decomposition(sys: &LinearSystem) -> Result<ModalDecomposition> {
    let l = sys.chol.l();
    let a = l
        .solve_lower_triangular(&sys.stiffness)
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenSolver("no convergence".into()))?;

    let n = sys.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::EigenSolver(format!("non-positive eigenvalue {bad}")));
    }

    let w = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let mut vectors = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::EigenSolver("triangular solve failed".into()))?;
    for mut col in vectors.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }

    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        let split = i == n || (lambdas[i] - lambdas[i - 1]).abs() > MULTIPLICITY_GAP * lambdas[i - 1].abs();
        if split {
            groups.push(start..i);
            start = i;
        }
    }

    Ok(ModalDecomposition { vectors, lambdas, groups })
}

/// Maps a configuration (or velocity) to its components outside one
/// eigenspace: `P V^T M`.
#[derive(Clone, Debug)]
pub struct ModalProjector {
    matrix: DMatrix<f64>,
}

impl ModalProjector {
    /// `mode_index` is 1-based over distinct eigenvalues.
    pub fn new(sys: &LinearSystem, dec: &ModalDecomposition, mode_index: usize) -> Result<Self> {
        if mode_index == 0 || mode_index > dec.distinct_count() {
            return Err(Error::InvalidArgument(format!(
                "mode index {mode_index} outside 1..={}",
                dec.distinct_count()
            )));
        }
        let keep = &dec.groups[mode_index - 1];
        let n = sys.dim();
        let mut p = DMatrix::<f64>::identity(n, n);
        for i in keep.clone() {
            p[(i, i)] = 0.0;
        }
        let matrix = p * dec.vectors.transpose() * sys.mass();
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// `||P V^T M v|| + ||P V^T M x||`.
    pub fn distance(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.apply(v).norm() + self.apply(x).norm()
    }
}

/// Gain `G` of the feedback `tau = -G x'` that damps every eigenspace except
/// mode `mode_index` (1-based over distinct eigenvalues).
pub fn eigenspace_damper(
    sys: &LinearSystem,
    dec: &ModalDecomposition,
    mode_index: usize,
    beta: f64,
) -> Result<DMatrix<f64>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let proj = ModalProjector::new(sys, dec, mode_index)?;
    Ok(proj.matrix.transpose() * &proj.matrix * beta)
}

#[derive(Clone, Debug, Default)]
pub struct LinearTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub tau: Vec<DVector<f64>>,
    pub distance: Vec<f64>,
}

impl LinearTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First time after which the eigenspace distance stays below
    /// `fraction` of its initial value.
    pub fn settle_time(&self, fraction: f64) -> Option<f64> {
        let d0 = *self.distance.first()?;
        let thresh = fraction * d0;
        if self.distance.last().is_some_and(|&d| d >= thresh && d0 > 0.0) {
            return None;
        }
        let last_above = self.distance.iter().rposition(|&d| d >= thresh);
        match last_above {
            None => Some(self.t[0]),
            Some(i) if i + 1 < self.t.len() => Some(self.t[i + 1]),
            Some(_) => None,
        }
    }

    fn tail(&self, fraction: f64) -> usize {
        let n = self.len();
        n - ((n as f64 * fraction).ceil() as usize).clamp(1, n)
    }

    /// Peak of `|tau|_inf` over the whole run and over the trailing `fraction`.
    pub fn tau_peaks(&self, fraction: f64) -> (f64, f64) {
        let inf = |t: &DVector<f64>| t.amax();
        let peak = self.tau.iter().map(inf).fold(0.0, f64::max);
        let trailing = self.tau[self.tail(fraction)..].iter().map(inf).fold(0.0, f64::max);
        (peak, trailing)
    }

    /// Ratio of peak |x_j| to peak |x_i| over the trailing `fraction`.
    pub fn amplitude_ratio(&self, i: usize, j: usize, fraction: f64) -> f64 {
        let start = self.tail(fraction);
        let amp = |k: usize| self.x[start..].iter().map(|x| x[k].abs()).fold(0.0, f64::max);
        amp(j) / amp(i)
    }
}

/// RK4 run of `M x'' = -K x - G x'`, recording the eigenspace distance.
pub fn simulate_linear(
    sys: &LinearSystem,
    gain: &DMatrix<f64>,
    target: &ModalProjector,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    settings: &SimSettings,
) -> Result<LinearTrajectory> {
    settings.validate()?;
    let n = sys.dim();
    if gain.nrows() != n || gain.ncols() != n || x0.len() != n || v0.len() != n {
        return Err(Error::InvalidArgument("dimension mismatch in linear simulation".into()));
    }
    let mut y: Vec<f64> = x0.iter().chain(v0.iter()).copied().collect();
    let mut traj = LinearTrajectory::default();
    let record = |traj: &mut LinearTrajectory, t: f64, y: &[f64]| {
        let x = DVector::from_column_slice(&y[..n]);
        let v = DVector::from_column_slice(&y[n..]);
        let tau = -(gain * &v);
        traj.distance.push(target.distance(&x, &v));
        traj.t.push(t);
        traj.x.push(x);
        traj.v.push(v);
        traj.tau.push(tau);
    };
    record(&mut traj, 0.0, &y);

    let mut rk = Rk4::new(2 * n);
    let steps = step_count(settings.t_end, settings.dt);
    for i in 0..steps {
        let t = i as f64 * settings.dt;
        rk.step(
            |_, y, dy| {
                let x = DVector::from_column_slice(&y[..n]);
                let v = DVector::from_column_slice(&y[n..]);
                let a = sys.accel(&x, &-(gain * &v));
                dy[..n].copy_from_slice(&y[n..]);
                dy[n..].copy_from_slice(a.as_slice());
                Ok(())
            },
            t,
            &mut y,
            settings.dt,
        )?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t + settings.dt });
        }
        if (i + 1) % settings.record_stride == 0 || i + 1 == steps {
            record(&mut traj, (i + 1) as f64 * settings.dt, &y);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eq3_system() -> LinearSystem {
        LinearSystem::two_mass(1.0, 1.0, 1.5, 1.0).unwrap()
    }

    #[test]
    fn diagonal_system_is_its_own_basis() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        assert_abs_diff_eq!(dec.lambdas[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.lambdas[1], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.vectors, DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn two_mass_eigenvalues_are_roots_of_characteristic_polynomial() {
        // lambda^2 - 7/2 lambda + 3/2 = 0 -> 1/2, 3
        let dec = modal_decomposition(&eq3_system()).unwrap();
        assert_abs_diff_eq!(dec.lambdas[0], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(dec.lambdas[1], 3.0, epsilon = 1e-13);
        assert_eq!(dec.multiplicities(), vec![1, 1]);
    }

    #[test]
    fn two_mass_mode_directions() {
        let dec = modal_decomposition(&eq3_system()).unwrap();
        let v1 = dec.vectors.column(0);
        let v2 = dec.vectors.column(1);
        // proportional to (1/2, 1) and (-2, 1)
        assert_abs_diff_eq!(v1[0] / v1[1], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(v2[0] / v2[1], -2.0, epsilon = 1e-13);
        // largest-magnitude entry positive
        assert!(v1[1] > 0.0 && v2[0] > 0.0);
    }

    #[test]
    fn two_mass_damper_gain() {
        let sys = eq3_system();
        let dec = modal_decomposition(&sys).unwrap();
        let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 0.25]);
        assert_abs_diff_eq!(g, expected, epsilon = 1e-12);
    }

    #[test]
    fn damper_on_diagonal_system() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        let g = eigenspace_damper(&sys, &dec, 1, 1.0).unwrap();
        assert_abs_diff_eq!(g, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])), epsilon = 1e-14);
    }

    #[test]
    fn damper_annihilates_selected_mode_with_nonidentity_mass() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.2, 0.0, 0.2, 1.0]);
        let k = DMatrix::from_row_slice(3, 3, &[5.0, -2.0, 0.0, -2.0, 4.0, -1.0, 0.0, -1.0, 3.0]);
        let sys = LinearSystem::new(m, k).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        for mode in 1..=3 {
            let g = eigenspace_damper(&sys, &dec, mode, 0.7).unwrap();
            let v = dec.vectors.column(mode - 1).into_owned();
            assert!((&g * v).amax() < 1e-12);
        }
        // V^{-1} M^{-1} K V diagonal
        let minv_k = sys.chol.solve(sys.stiffness());
        let d = dec.vectors.transpose() * sys.mass() * minv_k * &dec.vectors;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(d[(i, j)].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn repeated_eigenvalues_are_grouped() {
        let sys = LinearSystem::new(DMatrix::identity(3, 3), DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 5.0]))).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        assert_eq!(dec.multiplicities(), vec![2, 1]);
        let g = eigenspace_damper(&sys, &dec, 1, 1.0).unwrap();
        assert_abs_diff_eq!(g, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0])), epsilon = 1e-14);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let sys = eq3_system();
        let dec = modal_decomposition(&sys).unwrap();
        assert!(matches!(eigenspace_damper(&sys, &dec, 0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(eigenspace_damper(&sys, &dec, 3, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(eigenspace_damper(&sys, &dec, 1, 0.0), Err(Error::InvalidArgument(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(LinearSystem::new(asym, DMatrix::identity(2, 2)), Err(Error::NotSpd("M"))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(LinearSystem::new(DMatrix::identity(2, 2), indefinite), Err(Error::NotSpd("K"))));
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let sys = eq3_system();
        let dec = modal_decomposition(&sys).unwrap();
        let proj = ModalProjector::new(&sys, &dec, 1).unwrap();
        let x0 = DVector::from_vec(vec![0.3, -0.8]);
        let v0 = DVector::from_vec(vec![0.1, 0.4]);
        let settings = SimSettings { dt: 1e-4, t_end: 10.0, record_stride: 1000 };
        let traj = simulate_linear(&sys, &DMatrix::zeros(2, 2), &proj, &x0, &v0, &settings).unwrap();
        let e0 = sys.energy(&x0, &v0);
        for (x, v) in traj.x.iter().zip(&traj.v) {
            assert!((sys.energy(x, v) - e0).abs() / e0 < 1e-8);
        }
    }

    #[test]
    fn start_on_selected_eigenspace_needs_no_torque() {
        let sys = eq3_system();
        let dec = modal_decomposition(&sys).unwrap();
        let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
        let proj = ModalProjector::new(&sys, &dec, 1).unwrap();
        let v1 = dec.vectors.column(0).into_owned();
        let settings = SimSettings { dt: 1e-3, t_end: 10.0, record_stride: 10 };
        let traj = simulate_linear(&sys, &g, &proj, &(&v1 * 0.7), &(&v1 * -0.2), &settings).unwrap();
        let (peak, _) = traj.tau_peaks(0.2);
        assert!(peak < 1e-12, "peak torque {peak}");
    }
}
