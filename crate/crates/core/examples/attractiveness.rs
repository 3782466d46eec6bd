//! Where the stabilizer's attractiveness conditions hold, as a function of
//! damping gain and the largest angular velocity considered.

use nnm::control::{check_attractiveness, Gains};
use nnm::manifold::{solve_manifold, SolveOptions};
use nnm::{Model, PendulumParams};

fn main() -> nnm::Result<()> {
    let p = PendulumParams::default();
    let c = solve_manifold(&Model::Pendulum(p), &SolveOptions::default())?.coeffs;
    let speeds = [0.5, 1.0, 1.374, 2.0, 3.0, 8.0];
    print!("kappa_d \\ dtheta_max");
    for v in speeds {
        print!("{v:>8}");
    }
    println!();
    for kd in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        print!("{kd:>20}");
        for v in speeds {
            let r = check_attractiveness(&p, &c, &Gains::damping(kd), v)?;
            print!("{:>8}", if r.pass { "ok" } else { "-" });
        }
        println!();
    }
    let r = check_attractiveness(&p, &c, &Gains::damping(10.0), 8.0)?;
    println!("\nat 8 rad/s: min stiffness {:.2}, worst damping margin {:.2} at {:?}", r.min_stiffness, r.worst_damping_margin, r.worst_state);
    Ok(())
}
