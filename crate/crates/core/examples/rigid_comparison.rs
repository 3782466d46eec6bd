//! Torque the compliant robot spends on a motion versus what a rigid robot
//! would need to reproduce it.

use nnm::control::rigid_inverse_dynamics;
use nnm::scenario::*;
use nnm::Model;
use std::path::Path;

fn main() -> nnm::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig11".into());
    let cfg = ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json")))?;
    let out = run_scenario(&cfg, &RunOptions { compare_rigid: true }, None)?;
    let rigid = rigid_inverse_dynamics(&out.trajectory, &cfg.model)?;
    let peak = |v: &[[f64; 2]], i: usize| v.iter().fold(0.0f64, |m, t| m.max(t[i].abs()));
    let model = match cfg.model {
        Model::Pendulum(_) => "pendulum",
        Model::Leg(_) => "leg",
    };
    println!("{name} ({model}), t = 0 .. {:.2} s", out.summary.t_final);
    println!("           soft      rigid");
    println!("tau_theta  {:8.3}  {:8.3}", peak(&out.trajectory.torques, 0), peak(&rigid, 0));
    println!("tau_r      {:8.3}  {:8.3}", peak(&out.trajectory.torques, 1), peak(&rigid, 1));
    println!("max ratio  {:.3}", out.summary.max_ratio_soft_rigid.unwrap());
    Ok(())
}
