//! How well the polynomial manifold approximates the true nonlinear mode:
//! for several amplitudes, compare `X(0, v)` with the radius of the exact
//! symmetric periodic orbit, and measure drift off the manifold in an
//! open-loop run started on it.

use nnm::manifold::*;
use nnm::models::*;
use nnm::rk4::Rk4;
use nnm::sim::*;
use std::f64::consts::PI;

/// `r_dot` when `theta_dot` first vanishes, starting from `(0, v, r, 0)`.
fn turning_rdot(p: &PendulumParams, v: f64, r: f64) -> f64 {
    let mut y = [0.0, v, r, 0.0];
    let mut rk = Rk4::new(4);
    let dt = 1e-4;
    loop {
        let prev = y;
        rk.step(
            |_, y, dy| {
                let a = p.accel(&State2::from_slice(y), [0.0, 0.0])?;
                dy.copy_from_slice(&[y[1], a[0], y[3], a[1]]);
                Ok(())
            },
            0.0,
            &mut y,
            dt,
        )
        .unwrap();
        if prev[1] > 0.0 && y[1] <= 0.0 {
            return prev[3] + prev[1] / (prev[1] - y[1]) * (y[3] - prev[3]);
        }
    }
}

fn main() -> nnm::Result<()> {
    let p = PendulumParams::default();
    let model = Model::Pendulum(p);
    let eq = solve_manifold(&model, &SolveOptions::default())?.coeffs;
    let rest = solve_manifold(&model, &SolveOptions { center: ExpansionCenter::RestLength, ..Default::default() })?.coeffs;

    println!("{:>6} {:>10} {:>11} {:>11} {:>12}", "v", "exact r", "err (eq)", "err (rest)", "drift 5 s");
    for v in [0.2, 0.4, 0.8, 1.2, 7.0 * PI / 16.0, PI / 2.0] {
        let (mut a, mut b) = (eq.eval(0.0, v).0 - 0.01, eq.eval(0.0, v).0 + 0.01);
        let (mut fa, mut fb) = (turning_rdot(&p, v, a), turning_rdot(&p, v, b));
        for _ in 0..30 {
            if fb.abs() < 1e-13 || fa == fb {
                break;
            }
            let c = b - fb * (b - a) / (fb - fa);
            (a, fa) = (b, fb);
            b = c;
            fb = turning_rdot(&p, v, b);
        }
        let traj = integrate(&p, Some(&eq), &NoControl, eq.lift(0.0, v), &SimSettings::new(5.0)).unwrap();
        let drift = traj.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        println!("{v:6.3} {b:10.6} {:+11.2e} {:+11.2e} {drift:12.3e}", eq.eval(0.0, v).0 - b, rest.eval(0.0, v).0 - b);
    }
    Ok(())
}
