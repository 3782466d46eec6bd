//! Simplified controller on the damped segmented leg, sweeping the
//! excitation strength. Runs execute in parallel.

use nnm::scenario::*;
use std::path::Path;

fn main() -> nnm::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "alpha=0.2,0.3,0.5,0.7,0.9".into());
    let cfg = ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("presets/fig16.json"))?;
    let param: SweepParam = spec.parse()?;
    let runs = run_sweep(&cfg, &[param], &RunOptions::default(), None)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "alpha", "amplitude", "variation", "f_theta");
    for run in runs {
        let out = run.result?;
        let s = &out.summary;
        println!(
            "{:6.2} {:10.5} {:10.2e} {:10.4}",
            run.values[0],
            s.amplitude_theta.unwrap_or(f64::NAN),
            s.amplitude_variation.unwrap_or(f64::NAN),
            s.freq_theta_hz.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
