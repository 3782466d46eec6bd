//! Two masses on springs: modal basis, the damper that keeps only the first
//! mode, and a closed-loop run from `x = (0, 1)`.

use nalgebra::DVector;
use nnm::linear_modal::*;
use nnm::sim::SimSettings;

fn main() -> nnm::Result<()> {
    let sys = LinearSystem::two_mass(1.0, 1.0, 1.5, 1.0)?;
    let dec = modal_decomposition(&sys)?;
    println!("eigenvalues {:?}", dec.lambdas);
    println!("mode shapes (columns){}", dec.vectors);

    let gain = eigenspace_damper(&sys, &dec, 1, 1.25)?;
    println!("tau = -G x', G ={gain}");

    let target = ModalProjector::new(&sys, &dec, 1)?;
    let x0 = DVector::from_vec(vec![0.0, 1.0]);
    let traj = simulate_linear(&sys, &gain, &target, &x0, &DVector::zeros(2), &SimSettings { dt: 1e-3, t_end: 30.0, record_stride: 10 })?;
    for k in (0..traj.len()).step_by(250) {
        println!("t = {:5.1}  x = ({:+.4}, {:+.4})  distance {:.2e}", traj.t[k], traj.x[k][0], traj.x[k][1], traj.distance[k]);
    }
    println!("settled (1%) at {:?} s", traj.settle_time(0.01));
    println!("steady x2/x1 amplitude ratio {:.6}", traj.amplitude_ratio(0, 1, 0.2));
    Ok(())
}
