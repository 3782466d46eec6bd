//! Off-manifold start under the stabilizing controller for two damping
//! gains. Pass a directory to write both trajectories as CSV.

use std::f64::consts::PI;
use std::path::PathBuf;

use nnm::control::{Gains, Law};
use nnm::manifold::{solve_manifold, SolveOptions};
use nnm::scenario::write_trajectory_csv;
use nnm::sim::*;
use nnm::{Model, PendulumParams, State2};

fn main() -> nnm::Result<()> {
    let out: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);
    let p = PendulumParams::default();
    let c = solve_manifold(&Model::Pendulum(p), &SolveOptions::default())?.coeffs;
    let v = 7.0 * PI / 16.0;
    let (x, xd) = c.eval(0.0, v);
    let s0 = State2::new(0.0, v, x - 0.25, xd - 0.5);

    for kd in [1.0, 10.0] {
        let law = Law::Stabilize { model: &p, coeffs: &c, gains: Gains::damping(kd) };
        let traj = integrate(&p, Some(&c), &law, s0, &SimSettings::new(20.0))?;
        let rep = convergence_metrics(&traj)?;
        let overshoot = traj.delta.iter().fold(0.0f64, |m, d| m.max(-d));
        println!("kappa_d = {kd:>4}: settle {:?} s, steady |Delta| {:.2e} m, trailing |tau| {:.3}, largest overshoot r - X {overshoot:.3} m", rep.settle_time, rep.steady_delta, rep.trailing_tau_inf);
        for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let k = traj.t.iter().position(|&s| s >= t - 1e-9).unwrap();
            println!("   t = {t:4.1}  Delta = {:+.4}  tau = ({:+.3}, {:+.3})", traj.delta[k], traj.torques[k][0], traj.torques[k][1]);
        }
        if let Some(dir) = &out {
            write_trajectory_csv(&dir.join(format!("stabilize_kd{kd}.csv")), &traj)?;
        }
    }
    Ok(())
}
