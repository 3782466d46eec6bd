//! Builds the 16 matched-coefficient equations for the elastic pendulum,
//! solves them about both expansion centres and compares with the
//! closed-form approximations.

use nnm::manifold::*;
use nnm::{Model, PendulumParams};

fn main() -> nnm::Result<()> {
    let k1: f64 = std::env::args().nth(1).map_or(Ok(20.0), |s| s.parse()).expect("kappa1");
    let k2: f64 = std::env::args().nth(2).map_or(Ok(60.0), |s| s.parse()).expect("kappa2");
    let model = Model::Pendulum(PendulumParams { kappa1: k1, kappa2: k2, ..Default::default() });

    let pd = taylor_expand(&model, ExpansionCenter::RestLength, 3)?;
    let sys = build_residual_system(&pd)?;
    println!("equation 8:  {:?}", sys.equations[7]);
    println!("equation 12: {:?}", sys.equations[11]);

    let mut rest = None;
    for center in [ExpansionCenter::RestLength, ExpansionCenter::Equilibrium] {
        let s = solve_manifold(&model, &SolveOptions { center, ..Default::default() })?;
        println!("\n{center:?}: {} iterations, homotopy {}, residual {:.1e}", s.report.iterations, s.report.used_homotopy, s.report.residual_inf);
        for (name, v) in COEFF_NAMES.iter().zip(s.coeffs.to_vec()) {
            println!("  {name:<4} {v:+.6e}");
        }
        println!("  X(0, 7pi/16) = {:.4}", s.coeffs.eval(0.0, 7.0 * std::f64::consts::PI / 16.0).0);
        if center == ExpansionCenter::RestLength {
            rest = Some(s.coeffs);
        }
    }

    let rest = rest.unwrap();
    match closed_form_coeffs(k1, k2) {
        Ok(d) => {
            println!("\nclosed form vs rest-length Newton:");
            for (n, a, b) in [("a3", d.a3, rest.a3), ("a5", d.a5, rest.a5), ("a12", d.a12, rest.a12), ("a14", d.a14, rest.a14)] {
                println!("  {n:<4} {a:+.5}  {b:+.5}");
            }
        }
        Err(e) => println!("\nclosed form unavailable: {e}"),
    }
    Ok(())
}
