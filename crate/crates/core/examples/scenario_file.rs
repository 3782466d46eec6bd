//! Runs a JSON scenario the same way the command-line tool does and writes
//! the trajectory CSV and summary next to each other.
//!
//! `cargo run --example scenario_file -- presets/fig10.json /tmp/out`

use std::path::PathBuf;

use nnm::scenario::*;

fn main() -> nnm::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/presets/fig10.json").into()));
    let out_dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().join("nnm-scenario").display().to_string()));

    let cfg = ScenarioConfig::load(&config)?;
    let manifold = obtain_manifold(&cfg.model, &cfg.manifold, Some(&default_cache_dir()))?;
    println!("manifold residual {:.1e} ({:?})", manifold.residual_inf, manifold.origin);
    let out = run_with_manifold(&cfg, Some(manifold.coeffs), &RunOptions::default())?;

    let name = cfg.name.clone().unwrap_or_else(|| "run".into());
    write_trajectory_csv(&out_dir.join(format!("{name}.csv")), &out.trajectory)?;
    write_json(&out_dir.join(format!("{name}.summary.json")), &out.summary)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    for c in cfg.checks.evaluate(&out.summary) {
        println!("{:<24} {}  {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("written to {}", out_dir.display());
    Ok(())
}
