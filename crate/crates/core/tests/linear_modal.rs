use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use nnm::linear_modal::*;
use nnm::sim::SimSettings;
use nnm::Error;
use proptest::prelude::*;

fn demo() -> (LinearSystem, ModalDecomposition) {
    let sys = LinearSystem::two_mass(1.0, 1.0, 1.5, 1.0).unwrap();
    let dec = modal_decomposition(&sys).unwrap();
    (sys, dec)
}

fn settings(t_end: f64) -> SimSettings {
    SimSettings { dt: 1e-3, t_end, record_stride: 10 }
}

#[test]
fn diagonal_system_is_its_own_basis() {
    let sys = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
    let dec = modal_decomposition(&sys).unwrap();
    assert_relative_eq!(dec.lambdas[0], 1.0, epsilon = 1e-12);
    assert_relative_eq!(dec.lambdas[1], 4.0, epsilon = 1e-12);
    assert_relative_eq!(dec.vectors, DMatrix::identity(2, 2), epsilon = 1e-12);
    let g = eigenspace_damper(&sys, &dec, 1, 1.0).unwrap();
    assert_relative_eq!(g, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])), epsilon = 1e-12);
}

#[test]
fn two_mass_eigenvalues_are_roots_of_characteristic_polynomial() {
    let (_, dec) = demo();
    // lambda^2 - 7/2 lambda + 3/2 = 0
    let disc = (3.5f64 * 3.5 - 4.0 * 1.5).sqrt();
    assert_relative_eq!(dec.lambdas[0], (3.5 - disc) / 2.0, epsilon = 1e-12);
    assert_relative_eq!(dec.lambdas[1], (3.5 + disc) / 2.0, epsilon = 1e-12);
}

#[test]
fn two_mass_mode_directions() {
    let (_, dec) = demo();
    let v1 = dec.vectors.column(0);
    let v2 = dec.vectors.column(1);
    assert_relative_eq!(v1[1] / v1[0], 2.0, epsilon = 1e-12);
    assert_relative_eq!(v2[1] / v2[0], -0.5, epsilon = 1e-12);
    assert!(v1.iter().all(|x| *x > 0.0));
}

#[test]
fn damper_gain_for_two_masses() {
    let (sys, dec) = demo();
    let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 0.25]);
    assert_relative_eq!(g, expected, epsilon = 1e-12);
}

#[test]
fn damper_ignores_target_mode_velocity() {
    let (sys, dec) = demo();
    let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
    let tau = &g * dec.vectors.column(0);
    assert!(tau.amax() < 1e-12);
}

#[test]
fn bad_arguments() {
    let (sys, dec) = demo();
    assert!(matches!(eigenspace_damper(&sys, &dec, 0, 1.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(eigenspace_damper(&sys, &dec, 3, 1.0), Err(Error::InvalidArgument(_))));
    assert!(eigenspace_damper(&sys, &dec, 1, 0.0).is_err());
    let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(LinearSystem::new(DMatrix::identity(2, 2), not_spd), Err(Error::NotSpd("K"))));
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    assert!(matches!(LinearSystem::new(asym, DMatrix::identity(2, 2)), Err(Error::NotSpd("M"))));
}

#[test]
fn repeated_eigenvalues_group_together() {
    let sys = LinearSystem::new(DMatrix::identity(3, 3), DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 5.0]))).unwrap();
    let dec = modal_decomposition(&sys).unwrap();
    assert_eq!(dec.multiplicities(), vec![2, 1]);
    let g = eigenspace_damper(&sys, &dec, 1, 1.0).unwrap();
    assert_relative_eq!(g, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0])), epsilon = 1e-12);
}

#[test]
fn demo_converges_to_first_mode() {
    let (sys, dec) = demo();
    let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
    let target = ModalProjector::new(&sys, &dec, 1).unwrap();
    let x0 = DVector::from_vec(vec![0.0, 1.0]);
    let traj = simulate_linear(&sys, &g, &target, &x0, &DVector::zeros(2), &settings(30.0)).unwrap();
    let ts = traj.settle_time(0.01).unwrap();
    assert!((7.0..=13.0).contains(&ts), "{ts}");
    assert_relative_eq!(traj.amplitude_ratio(0, 1, 0.2), 2.0, max_relative = 0.01);
}

#[test]
fn open_loop_conserves_energy() {
    let (sys, _) = demo();
    let dec = modal_decomposition(&sys).unwrap();
    let target = ModalProjector::new(&sys, &dec, 1).unwrap();
    let x0 = DVector::from_vec(vec![0.3, -0.7]);
    let v0 = DVector::from_vec(vec![0.1, 0.4]);
    let s = SimSettings { dt: 1e-4, t_end: 10.0, record_stride: 1000 };
    let traj = simulate_linear(&sys, &DMatrix::zeros(2, 2), &target, &x0, &v0, &s).unwrap();
    let e0 = sys.energy(&x0, &v0);
    for (x, v) in traj.x.iter().zip(&traj.v) {
        assert!((sys.energy(x, v) - e0).abs() / e0 < 1e-8);
    }
    assert!(traj.settle_time(0.01).is_none());
}

#[test]
fn start_on_eigenspace_needs_no_torque() {
    let (sys, dec) = demo();
    let g = eigenspace_damper(&sys, &dec, 1, 1.25).unwrap();
    let target = ModalProjector::new(&sys, &dec, 1).unwrap();
    let x0 = dec.vectors.column(0) * 0.4;
    let v0 = dec.vectors.column(0) * -0.2;
    let traj = simulate_linear(&sys, &g, &target, &x0, &v0, &settings(10.0)).unwrap();
    assert!(traj.tau.iter().all(|t| t.amax() < 1e-10));
}

fn spd(n: usize, entries: &[f64], shift: f64) -> DMatrix<f64> {
    let a = DMatrix::from_iterator(n, n, entries.iter().copied());
    &a * a.transpose() + DMatrix::identity(n, n) * shift
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_spd_pairs_have_positive_m_orthonormal_modes(
        n in 1usize..=6,
        m in prop::collection::vec(-1.0f64..1.0, 36),
        k in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let mass = spd(n, &m[..n * n], 0.5);
        let stiff = spd(n, &k[..n * n], 0.5);
        let sys = LinearSystem::new(mass.clone(), stiff.clone()).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        prop_assert!(dec.lambdas.iter().all(|l| *l > 0.0));
        prop_assert!(dec.lambdas.windows(2).all(|w| w[0] <= w[1]));
        let v = &dec.vectors;
        let gram = v.transpose() * &mass * v;
        prop_assert!((gram - DMatrix::identity(n, n)).amax() < 1e-8);
        let kv = v.transpose() * &stiff * v;
        for i in 0..n {
            prop_assert!((kv[(i, i)] - dec.lambdas[i]).abs() < 1e-8 * (1.0 + dec.lambdas[i]));
        }
    }

    #[test]
    fn closed_loop_reaches_target_eigenspace(
        k in prop::collection::vec(-1.0f64..1.0, 9),
        x0 in prop::collection::vec(-1.0f64..1.0, 3),
        beta in 0.5f64..2.0,
    ) {
        let sys = LinearSystem::new(DMatrix::identity(3, 3), spd(3, &k, 0.5)).unwrap();
        let dec = modal_decomposition(&sys).unwrap();
        prop_assume!(dec.distinct_count() == 3 && (dec.lambdas[1] - dec.lambdas[0]) > 0.05);
        let g = eigenspace_damper(&sys, &dec, 1, beta).unwrap();
        let target = ModalProjector::new(&sys, &dec, 1).unwrap();
        let x0 = DVector::from_vec(x0);
        let v0 = DVector::zeros(3);
        prop_assume!(target.distance(&x0, &v0) > 1e-3);
        let traj = simulate_linear(&sys, &g, &target, &x0, &v0, &SimSettings { dt: 1e-2, t_end: 400.0, record_stride: 10 }).unwrap();
        let d0 = traj.distance[0];
        let dn = *traj.distance.last().unwrap();
        prop_assert!(dn < 1e-6 * d0, "{} -> {}", d0, dn);
    }
}
