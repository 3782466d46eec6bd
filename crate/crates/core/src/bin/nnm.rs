use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nnm::manifold::{closed_form_coeffs, solve_manifold, ExpansionCenter, SolveOptions};
use nnm::scenario::{
    default_cache_dir, obtain_manifold, run_linear_demo, run_scenario, run_sweep, write_json, write_linear_csv, write_sweep_csv,
    write_trajectory_csv, CheckOutcome, LinearDemoConfig, ManifoldOrigin, RunOptions, ScenarioConfig, SweepParam,
};
use nnm::{Error, Model};
use serde_json::json;

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "nnm", version, about = "Nonlinear normal modes of 2-DoF compliant systems")]
struct Cli {
    /// Scenario (or linear demo) JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Verify the config's `checks` and exit with status 4 on failure.
    #[arg(long, global = true)]
    check: bool,
    /// Reserved; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Two-mass chain driven onto one linear eigenspace.
    LinearDemo(LinearFlags),
    /// Solve (or load from cache) the manifold coefficients.
    SolveManifold {
        #[arg(long, value_parser = parse_center)]
        center: Option<ExpansionCenter>,
    },
    /// Run a scenario and write its trajectory and summary.
    Simulate {
        #[arg(long)]
        compare_rigid: bool,
    },
    /// Run a scenario over a grid of parameter values.
    Sweep {
        /// `name=v1,v2,...`; repeat for a Cartesian grid.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        #[arg(long)]
        compare_rigid: bool,
    },
}

#[derive(Args)]
struct LinearFlags {
    #[arg(long)]
    m1: Option<f64>,
    #[arg(long)]
    m2: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mode: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

fn parse_center(s: &str) -> Result<ExpansionCenter, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown center `{s}` (rest_length or equilibrium)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_CONFIG })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.cmd {
        Cmd::LinearDemo(flags) => linear_demo(cli, flags),
        Cmd::SolveManifold { center } => solve(cli, *center),
        Cmd::Simulate { compare_rigid } => simulate(cli, *compare_rigid),
        Cmd::Sweep { params, compare_rigid } => sweep(cli, params, *compare_rigid),
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

/// Relative configured paths live under `--out`; missing ones get a default name there.
fn output_path(cli: &Cli, configured: Option<&Path>, default_name: String) -> PathBuf {
    match configured {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => out_dir(cli).join(p),
        None => out_dir(cli).join(default_name),
    }
}

fn stem(cli: &Cli, name: Option<&str>, fallback: &str) -> String {
    name.map(str::to_string)
        .or_else(|| cli.config.as_deref().and_then(Path::file_stem).map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| fallback.to_string())
}

fn load_scenario(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required for this subcommand".into()))?;
    ScenarioConfig::load(path)
}

fn report_checks(outcomes: &[CheckOutcome]) -> bool {
    for c in outcomes {
        say!("check {:<22} {}  {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    outcomes.iter().all(|c| c.pass)
}

fn linear_demo(cli: &Cli, f: &LinearFlags) -> Result<ExitCode, Error> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<LinearDemoConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => LinearDemoConfig::default(),
    };
    let set = |dst: &mut f64, src: Option<f64>| {
        if let Some(v) = src {
            *dst = v;
        }
    };
    set(&mut cfg.m1, f.m1);
    set(&mut cfg.m2, f.m2);
    set(&mut cfg.k1, f.k1);
    set(&mut cfg.k2, f.k2);
    set(&mut cfg.beta, f.beta);
    set(&mut cfg.sim.t_end, f.t_end);
    set(&mut cfg.sim.dt, f.dt);
    if let Some(m) = f.mode {
        cfg.mode = m;
    }
    let (traj, summary) = run_linear_demo(&cfg)?;
    let name = stem(cli, None, "linear_demo");
    write_linear_csv(&output_path(cli, None, format!("{name}.csv")), &traj)?;
    write_json(&output_path(cli, None, format!("{name}.summary.json")), &summary)?;
    say!("{}", serde_json::to_string_pretty(&summary)?);
    if cli.check && !report_checks(&cfg.checks.evaluate(&summary)) {
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(cli: &Cli, center: Option<ExpansionCenter>) -> Result<ExitCode, Error> {
    let mut cfg = load_scenario(cli)?;
    if let Some(c) = center {
        cfg.manifold.center = c;
    }
    let cache = default_cache_dir();
    let got = obtain_manifold(&cfg.model, &cfg.manifold, Some(&cache))?;
    let name = stem(cli, cfg.name.as_deref(), "manifold");
    let coeff_path = output_path(cli, None, format!("{name}.manifold.json"));
    write_json(&coeff_path, &got.coeffs)?;
    match &got.origin {
        ManifoldOrigin::Cache(p) => say!("reused cached manifold {}", p.display()),
        ManifoldOrigin::Solved { iterations, used_homotopy, .. } => {
            say!("solved in {iterations} Newton iterations (homotopy: {used_homotopy})")
        }
    }
    say!("max |residual| = {:e}", got.residual_inf);
    say!("coefficients written to {}", coeff_path.display());

    let mut report = json!({ "residual_inf": got.residual_inf, "center": cfg.manifold.center, "coeffs": got.coeffs });
    if let Model::Pendulum(p) = &cfg.model {
        if p.r0 == 1.0 && p.g == 9.81 {
            report["closed_form"] = closed_form_cross_check(&cfg.model, p.kappa1, p.kappa2)?;
        }
    }
    write_json(&output_path(cli, None, format!("{name}.manifold-report.json")), &report)?;
    if cli.check {
        let pass = got.residual_inf < 1e-10;
        say!("check {:<22} {}  {:e} < 1e-10", "residual", if pass { "PASS" } else { "FAIL" }, got.residual_inf);
        if !pass {
            return Ok(ExitCode::from(EXIT_CHECK));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Compares the rest-length Newton solution with the closed-form
/// approximations; a vanishing denominator is reported, not fatal.
fn closed_form_cross_check(model: &Model, k1: f64, k2: f64) -> Result<serde_json::Value, Error> {
    let solved = solve_manifold(model, &SolveOptions { center: ExpansionCenter::RestLength, ..SolveOptions::default() });
    match closed_form_coeffs(k1, k2).and_then(|d| solved.map(|s| (d, s.coeffs))) {
        Ok((d, newton)) => {
            let rows = [("a3", d.a3, newton.a3), ("a5", d.a5, newton.a5), ("a12", d.a12, newton.a12), ("a14", d.a14, newton.a14)];
            let mut out = serde_json::Map::new();
            say!("closed-form cross-check (rest-length expansion):");
            for (name, closed, solved) in rows {
                let rel = (closed - solved).abs() / solved.abs();
                say!("  {name:<4} closed form {closed:>14.6e}  newton {solved:>14.6e}  rel. delta {rel:.3e}");
                out.insert(name.into(), json!({ "closed_form": closed, "newton": solved, "relative_delta": rel }));
            }
            Ok(serde_json::Value::Object(out))
        }
        Err(e) => {
            eprintln!("closed-form cross-check unavailable: {e}");
            Ok(json!({ "error": e.to_string() }))
        }
    }
}

fn simulate(cli: &Cli, compare_rigid: bool) -> Result<ExitCode, Error> {
    let cfg = load_scenario(cli)?;
    let out = run_scenario(&cfg, &RunOptions { compare_rigid }, Some(&default_cache_dir()))?;
    let name = stem(cli, cfg.name.as_deref(), "run");
    let csv = output_path(cli, cfg.outputs.csv_path.as_deref(), format!("{name}.csv"));
    let summary = output_path(cli, cfg.outputs.summary_path.as_deref(), format!("{name}.summary.json"));
    write_trajectory_csv(&csv, &out.trajectory)?;
    write_json(&summary, &out.summary)?;
    say!("{}", serde_json::to_string_pretty(&out.summary)?);
    if let Some(e) = &out.abort {
        eprintln!("error: run stopped early: {e}");
        return Ok(ExitCode::from(EXIT_NUMERIC));
    }
    if cli.check && !report_checks(&cfg.checks.evaluate(&out.summary)) {
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(cli: &Cli, specs: &[String], compare_rigid: bool) -> Result<ExitCode, Error> {
    let cfg = load_scenario(cli)?;
    let params = specs.iter().map(|s| s.parse::<SweepParam>()).collect::<Result<Vec<_>, _>>()?;
    let runs = run_sweep(&cfg, &params, &RunOptions { compare_rigid }, Some(&default_cache_dir()))?;
    let dir = out_dir(cli);
    let mut numeric = false;
    let mut checks_ok = true;
    for run in &runs {
        let run_dir = dir.join(format!("run_{:03}", run.index));
        write_json(&run_dir.join("config.json"), &run.config)?;
        let label: Vec<String> = params.iter().zip(&run.values).map(|(p, v)| format!("{}={v}", p.name)).collect();
        match &run.result {
            Ok(out) => {
                write_trajectory_csv(&run_dir.join("trajectory.csv"), &out.trajectory)?;
                write_json(&run_dir.join("summary.json"), &out.summary)?;
                numeric |= out.abort.is_some();
                say!("run {:03} [{}] {}", run.index, label.join(" "), out.summary.aborted.as_deref().unwrap_or("ok"));
                if cli.check {
                    checks_ok &= report_checks(&run.config.checks.evaluate(&out.summary));
                }
            }
            Err(e) => {
                numeric |= e.is_numeric();
                say!("run {:03} [{}] error: {e}", run.index, label.join(" "));
            }
        }
    }
    let agg = dir.join("sweep.csv");
    write_sweep_csv(&agg, &params, &runs)?;
    say!("aggregate written to {}", agg.display());
    if numeric {
        return Ok(ExitCode::from(EXIT_NUMERIC));
    }
    if runs.iter().any(|r| r.result.is_err()) {
        return Ok(ExitCode::from(EXIT_CONFIG));
    }
    if cli.check && !checks_ok {
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    Ok(ExitCode::SUCCESS)
}
