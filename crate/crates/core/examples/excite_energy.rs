//! Energy-band excitation from rest with the combined controller. Prints the
//! on-manifold energy once per second until the run ends.

use std::f64::consts::PI;

use nnm::control::{EnergyBand, Gains, Law};
use nnm::manifold::{solve_manifold, SolveOptions};
use nnm::sim::*;
use nnm::{Model, Model2Dof, PendulumParams};

fn main() -> nnm::Result<()> {
    let gamma: f64 = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("gamma"));
    let p = PendulumParams::default();
    let c = solve_manifold(&Model::Pendulum(p), &SolveOptions::default())?.coeffs;
    let band = EnergyBand { e_lo: 21.0, e_hi: 22.0, x_lo: -PI / 32.0, x_hi: PI / 32.0, gamma };
    let law = Law::Excite { model: &p, coeffs: &c, gains: Gains::damping(10.0), band };

    let (traj, abort) = match integrate(&p, Some(&c), &law, p.equilibrium()?, &SimSettings::new(30.0)) {
        Ok(t) => (t, None),
        Err(a) => (a.partial, Some(a.error)),
    };
    for k in (0..traj.len()).step_by(1000) {
        let s = traj.states[k];
        println!("t = {:5.1}  E_M = {:7.3}  theta = {:+.3}  r = {:.3}  Delta = {:+.3}", traj.t[k], traj.energy_m[k], s.q1, s.q2, traj.delta[k]);
    }
    if let Some(e) = abort {
        println!("stopped: {e}");
    }
    let entry = traj.energy_m.iter().position(|e| band.contains_energy(*e)).map(|k| traj.t[k]);
    println!("first in band at {entry:?} s");
    if let (Ok(ft), Ok(fr)) = (frequency_estimate(&traj, Channel::Theta), frequency_estimate(&traj, Channel::Radius)) {
        println!("f_theta {ft:.4} Hz, f_r {fr:.4} Hz, ratio {:.4}", fr / ft);
    }
    Ok(())
}
