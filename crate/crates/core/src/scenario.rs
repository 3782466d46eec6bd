//! JSON scenario files and the pipelines behind the command-line tool:
//! manifold caching, closed-loop runs with summaries, the two-mass linear
//! demo and parameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{rigid_inverse_dynamics, EnergyBand, Gains, Law};
use crate::error::{Error, Result};
use crate::linear_modal::{eigenspace_damper, modal_decomposition, simulate_linear, LinearSystem, LinearTrajectory, ModalProjector};
use crate::manifold::{solve_manifold, ExpansionCenter, ManifoldCoeffs, SolveOptions};
use crate::models::{Model, Model2Dof, State2};
use crate::sim::{convergence_metrics, frequency_estimate, integrate, limit_cycle, Channel, NoControl, SimSettings, Trajectory};

pub const CSV_COLUMNS: [&str; 13] =
    ["t", "theta", "theta_dot", "r", "r_dot", "X", "Xdot", "delta", "ddelta", "tau_theta", "tau_r", "E", "E_M"];

pub const LINEAR_CSV_COLUMNS: [&str; 8] = ["t", "x1", "x2", "v1", "v2", "tau1", "tau2", "dist_to_eigenspace"];

/// Cycles used for the limit-cycle amplitude in summaries.
pub const LIMIT_CYCLE_WINDOW: usize = 5;

pub const CACHE_ENV: &str = "NNM_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: Model,
    #[serde(default)]
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    pub sim: SimSettings,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub checks: Checks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    /// When false the coefficients must come from `cache_path`.
    #[serde(default = "yes")]
    pub solve: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default)]
    pub center: ExpansionCenter,
}

fn yes() -> bool {
    true
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { solve: true, cache_path: None, center: ExpansionCenter::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    None,
    Stabilize,
    Excite,
    Simplified,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(rename = "type")]
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Gains>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<EnergyBand>,
}

/// `manifold` places the slave at `X + delta_r`, `Xdot + delta_r_dot`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    #[default]
    Equilibrium,
    State { theta: f64, theta_dot: f64, r: f64, r_dot: f64 },
    Manifold {
        theta: f64,
        theta_dot: f64,
        #[serde(default)]
        delta_r: f64,
        #[serde(default)]
        delta_r_dot: f64,
    },
}

impl InitialState {
    pub fn resolve<M: Model2Dof>(&self, model: &M, manifold: Option<&ManifoldCoeffs>) -> Result<State2> {
        match *self {
            InitialState::Equilibrium => model.equilibrium(),
            InitialState::State { theta, theta_dot, r, r_dot } => Ok(State2::new(theta, theta_dot, r, r_dot)),
            InitialState::Manifold { theta, theta_dot, delta_r, delta_r_dot } => {
                let c = manifold.ok_or_else(|| Error::Config("a manifold initial state needs a manifold".into()))?;
                let (x, xd) = c.eval(theta, theta_dot);
                Ok(State2::new(theta, theta_dot, x + delta_r, xd + delta_r_dot))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_path: Option<PathBuf>,
}

/// Bounds verified by `--check`. Absent fields are not checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_time_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trailing_tau_inf_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_m_final_range: Option<[f64; 2]>,
    /// `[target, tolerance]` for `freq_r / freq_theta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_ratio: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio_soft_rigid_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_variation_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completes: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Checks {
    pub fn is_empty(&self) -> bool {
        *self == Checks::default()
    }

    pub fn evaluate(&self, s: &Summary) -> Vec<CheckOutcome> {
        let mut out = Vec::new();
        let mut push = |name, pass, detail: String| out.push(CheckOutcome { name, pass, detail });
        if let Some(max) = self.settle_time_max {
            push("settle_time", s.settle_time_s.is_some_and(|t| t <= max), format!("{:?} <= {max}", s.settle_time_s));
        }
        if let Some(max) = self.trailing_tau_inf_max {
            push("trailing_tau_inf", s.trailing_tau_inf < max, format!("{:e} < {max:e}", s.trailing_tau_inf));
        }
        if let Some([lo, hi]) = self.e_m_final_range {
            push("E_M_final", s.e_m_final.is_some_and(|e| (lo..=hi).contains(&e)), format!("{:?} in [{lo}, {hi}]", s.e_m_final));
        }
        if let Some([target, tol]) = self.freq_ratio {
            let ratio = s.freq_r_hz.zip(s.freq_theta_hz).map(|(r, t)| r / t);
            push("freq_ratio", ratio.is_some_and(|q| (q - target).abs() <= tol), format!("{ratio:?} = {target} +- {tol}"));
        }
        if let Some(max) = self.max_ratio_soft_rigid_max {
            push("max_ratio_soft_rigid", s.max_ratio_soft_rigid.is_some_and(|q| q < max), format!("{:?} < {max}", s.max_ratio_soft_rigid));
        }
        if let Some(max) = self.amplitude_variation_max {
            push("amplitude_variation", s.amplitude_variation.is_some_and(|v| v < max), format!("{:?} < {max}", s.amplitude_variation));
        }
        if self.completes == Some(true) {
            push("completes", s.aborted.is_none(), format!("aborted: {:?}", s.aborted));
        }
        out
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.model.validate().map_err(cfg_err)?;
        self.sim.validate().map_err(cfg_err)?;
        let c = &self.controller;
        let needs_gains = c.kind != ControllerKind::None;
        let needs_band = matches!(c.kind, ControllerKind::Excite | ControllerKind::Simplified);
        match (needs_gains, c.gains) {
            (true, None) => return Err(Error::Config(format!("controller {:?} needs gains", c.kind))),
            (_, Some(g)) => g.validate().map_err(cfg_err)?,
            _ => {}
        }
        match (needs_band, c.band) {
            (true, None) => return Err(Error::Config(format!("controller {:?} needs a band", c.kind))),
            (_, Some(b)) => b.validate().map_err(cfg_err)?,
            _ => {}
        }
        if !self.manifold.solve && self.manifold.cache_path.is_none() && self.needs_manifold() {
            return Err(Error::Config("manifold.solve is false but no cache_path was given".into()));
        }
        Ok(())
    }

    pub fn needs_manifold(&self) -> bool {
        self.controller.kind != ControllerKind::None
            || matches!(self.initial_state, InitialState::Manifold { .. })
            || self.manifold.solve
            || self.manifold.cache_path.is_some()
    }
}

/// Hash of everything the manifold coefficients depend on.
pub fn cache_key(model: &Model, center: ExpansionCenter) -> String {
    let text = serde_json::to_string(&(model, center)).expect("model serializes");
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `$NNM_CACHE_DIR`, else `nnm-cache` under the system temp directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("nnm-cache"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    residual_inf: f64,
    coeffs: ManifoldCoeffs,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldOrigin {
    Cache(PathBuf),
    Solved { path: Option<PathBuf>, residual_inf: f64, iterations: usize, used_homotopy: bool },
}

#[derive(Clone, Debug)]
pub struct ObtainedManifold {
    pub coeffs: ManifoldCoeffs,
    pub residual_inf: f64,
    pub origin: ManifoldOrigin,
}

fn read_cache(path: &Path, key: &str) -> Option<CacheEntry> {
    let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    (entry.key == key).then_some(entry)
}

/// Loads coefficients from the cache when the hash matches, otherwise
/// solves and (if `cache_path` or a cache dir is available) stores them.
pub fn obtain_manifold(
    model: &Model,
    cfg: &ManifoldConfig,
    cache_dir: Option<&Path>,
) -> Result<ObtainedManifold> {
    let key = cache_key(model, cfg.center);
    let path = cfg.cache_path.clone().or_else(|| cache_dir.map(|d| d.join(format!("manifold-{}.json", &key[..16]))));
    if let Some(entry) = path.as_deref().and_then(|p| read_cache(p, &key)) {
        return Ok(ObtainedManifold {
            coeffs: entry.coeffs,
            residual_inf: entry.residual_inf,
            origin: ManifoldOrigin::Cache(path.unwrap()),
        });
    }
    if !cfg.solve {
        let shown = path.map(|p| p.display().to_string()).unwrap_or_default();
        return Err(Error::Config(format!("no cached manifold matching these parameters at {shown}")));
    }
    let sol = solve_manifold(model, &SolveOptions { center: cfg.center, ..SolveOptions::default() })?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let entry = CacheEntry { key, residual_inf: sol.report.residual_inf, coeffs: sol.coeffs.clone() };
        fs::write(p, serde_json::to_string_pretty(&entry)?)?;
    }
    Ok(ObtainedManifold {
        coeffs: sol.coeffs,
        residual_inf: sol.report.residual_inf,
        origin: ManifoldOrigin::Solved {
            path,
            residual_inf: sol.report.residual_inf,
            iterations: sol.report.iterations,
            used_homotopy: sol.report.used_homotopy,
        },
    })
}

/// Headline numbers of one run. Frequencies and amplitudes are `None` when
/// the run does not oscillate enough to measure them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub settle_time_s: Option<f64>,
    pub trailing_tau_inf: f64,
    #[serde(rename = "E_M_final")]
    pub e_m_final: Option<f64>,
    pub freq_theta_hz: Option<f64>,
    pub freq_r_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio_soft_rigid: Option<f64>,
    pub steady_delta: Option<f64>,
    pub amplitude_theta: Option<f64>,
    pub amplitude_variation: Option<f64>,
    pub t_final: f64,
    pub aborted: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub compare_rigid: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub coeffs: Option<ManifoldCoeffs>,
    pub initial_state: State2,
    pub trajectory: Trajectory,
    pub summary: Summary,
    /// Set when the integration stopped early; `trajectory` is then partial.
    pub abort: Option<Error>,
}

/// Runs a scenario with already-obtained manifold coefficients.
pub fn run_with_manifold(cfg: &ScenarioConfig, coeffs: Option<ManifoldCoeffs>, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let model = &cfg.model;
    let needs = cfg.controller.kind != ControllerKind::None || matches!(cfg.initial_state, InitialState::Manifold { .. });
    if needs && coeffs.is_none() {
        return Err(Error::Config("this scenario needs manifold coefficients".into()));
    }
    let s0 = cfg.initial_state.resolve(model, coeffs.as_ref())?;
    let result = match (cfg.controller.kind, coeffs.as_ref()) {
        (ControllerKind::None, c) => integrate(model, c, &NoControl, s0, &cfg.sim),
        (kind, Some(c)) => {
            let gains = cfg.controller.gains.expect("validated");
            let law = match kind {
                ControllerKind::Stabilize => Law::Stabilize { model, coeffs: c, gains },
                ControllerKind::Excite => Law::Excite { model, coeffs: c, gains, band: cfg.controller.band.expect("validated") },
                _ => Law::Simplified { model, coeffs: c, kappa_d: gains.kappa_d, band: cfg.controller.band.expect("validated") },
            };
            integrate(model, Some(c), &law, s0, &cfg.sim)
        }
        (_, None) => unreachable!(),
    };
    let (trajectory, abort) = match result {
        Ok(t) => (t, None),
        Err(a) => (a.partial, Some(a.error)),
    };
    if trajectory.is_empty() {
        return Err(abort.unwrap_or_else(|| Error::InvalidArgument("empty trajectory".into())));
    }
    let summary = summarize(model, &trajectory, abort.as_ref(), opts)?;
    Ok(RunOutput { coeffs, initial_state: s0, trajectory, summary, abort })
}

/// Full pipeline: manifold (cached or solved), then the run.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions, cache_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let coeffs = if cfg.needs_manifold() { Some(obtain_manifold(&cfg.model, &cfg.manifold, cache_dir)?.coeffs) } else { None };
    run_with_manifold(cfg, coeffs, opts)
}

pub fn summarize(model: &Model, traj: &Trajectory, abort: Option<&Error>, opts: &RunOptions) -> Result<Summary> {
    let conv = convergence_metrics(traj)?;
    let has_manifold = traj.delta.first().is_some_and(|d| !d.is_nan());
    let lc = limit_cycle(traj, Channel::Theta, LIMIT_CYCLE_WINDOW).ok();
    let max_ratio_soft_rigid = if opts.compare_rigid {
        let rigid = rigid_inverse_dynamics(traj, model)?;
        let peak = |v: &[[f64; 2]]| v.iter().fold(0.0f64, |m, t| m.max(t[0].abs()).max(t[1].abs()));
        Some(peak(&traj.torques) / peak(&rigid))
    } else {
        None
    };
    Ok(Summary {
        settle_time_s: conv.settle_time,
        trailing_tau_inf: conv.trailing_tau_inf,
        e_m_final: traj.energy_m.last().copied().filter(|e| e.is_finite()),
        freq_theta_hz: frequency_estimate(traj, Channel::Theta).ok(),
        freq_r_hz: frequency_estimate(traj, Channel::Radius).ok(),
        max_ratio_soft_rigid,
        steady_delta: has_manifold.then_some(conv.steady_delta),
        amplitude_theta: lc.map(|l| l.amplitude),
        amplitude_variation: lc.map(|l| l.variation),
        t_final: *traj.t.last().expect("non-empty"),
        aborted: abort.map(|e| e.to_string()),
    })
}

/// Float formatting shared by every CSV writer: 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt17).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let rows = (0..traj.len()).map(|i| {
        let s = traj.states[i];
        vec![
            traj.t[i],
            s.q1,
            s.dq1,
            s.q2,
            s.dq2,
            traj.x[i],
            traj.xdot[i],
            traj.delta[i],
            traj.ddelta[i],
            traj.torques[i][0],
            traj.torques[i][1],
            traj.energy[i],
            traj.energy_m[i],
        ]
    });
    write_rows(path, &CSV_COLUMNS, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------- linear demo

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearDemoConfig {
    pub m1: f64,
    pub m2: f64,
    pub k1: f64,
    pub k2: f64,
    /// Zero runs the plant without feedback.
    pub beta: f64,
    /// Eigenspace to converge to, 1-based over distinct eigenvalues.
    pub mode: usize,
    pub x0: [f64; 2],
    pub v0: [f64; 2],
    pub sim: SimSettings,
    pub checks: LinearChecks,
}

impl Default for LinearDemoConfig {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 1.0,
            k1: 1.5,
            k2: 1.0,
            beta: 1.25,
            mode: 1,
            x0: [0.0, 1.0],
            v0: [0.0, 0.0],
            sim: SimSettings { dt: 1e-3, t_end: 30.0, record_stride: 10 },
            checks: LinearChecks::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearChecks {
    pub settle_time_range: Option<[f64; 2]>,
    /// `[target, relative tolerance]`.
    pub amplitude_ratio: Option<[f64; 2]>,
    /// Bound on trailing over peak torque.
    pub trailing_tau_fraction_max: Option<f64>,
}

/// Fraction of the initial distance that counts as converged.
pub const LINEAR_SETTLE_FRACTION: f64 = 0.01;
/// Trailing window for amplitude ratios and torque.
pub const LINEAR_TAIL: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDemoSummary {
    pub settle_time_s: Option<f64>,
    pub settled: bool,
    /// `max |x2| / max |x1|` over the trailing window.
    pub final_amplitude_ratio: f64,
    pub peak_tau_inf: f64,
    pub trailing_tau_inf: f64,
    pub eigenvalues: Vec<f64>,
    pub modes: [[f64; 2]; 2],
    pub gain: [[f64; 2]; 2],
}

impl LinearChecks {
    pub fn evaluate(&self, s: &LinearDemoSummary) -> Vec<CheckOutcome> {
        let mut out = Vec::new();
        if let Some([lo, hi]) = self.settle_time_range {
            out.push(CheckOutcome {
                name: "settle_time",
                pass: s.settle_time_s.is_some_and(|t| (lo..=hi).contains(&t)),
                detail: format!("{:?} in [{lo}, {hi}]", s.settle_time_s),
            });
        }
        if let Some([target, rel]) = self.amplitude_ratio {
            out.push(CheckOutcome {
                name: "amplitude_ratio",
                pass: (s.final_amplitude_ratio - target).abs() <= rel * target,
                detail: format!("{} = {target} +- {}%", s.final_amplitude_ratio, rel * 100.0),
            });
        }
        if let Some(max) = self.trailing_tau_fraction_max {
            let frac = s.trailing_tau_inf / s.peak_tau_inf;
            out.push(CheckOutcome { name: "trailing_tau", pass: frac < max, detail: format!("{frac:e} < {max:e}") });
        }
        out
    }
}

pub fn run_linear_demo(cfg: &LinearDemoConfig) -> Result<(LinearTrajectory, LinearDemoSummary)> {
    if !(cfg.beta >= 0.0) {
        return Err(Error::Config(format!("beta must be non-negative, got {}", cfg.beta)));
    }
    cfg.sim.validate().map_err(|e| Error::Config(e.to_string()))?;
    let sys = LinearSystem::two_mass(cfg.m1, cfg.m2, cfg.k1, cfg.k2)?;
    let dec = modal_decomposition(&sys)?;
    let gain = if cfg.beta == 0.0 { DMatrix::zeros(2, 2) } else { eigenspace_damper(&sys, &dec, cfg.mode, cfg.beta)? };
    let proj = ModalProjector::new(&sys, &dec, cfg.mode)?;
    let x0 = DVector::from_row_slice(&cfg.x0);
    let v0 = DVector::from_row_slice(&cfg.v0);
    let traj = simulate_linear(&sys, &gain, &proj, &x0, &v0, &cfg.sim)?;
    let settle = traj.settle_time(LINEAR_SETTLE_FRACTION);
    let (peak, trailing) = traj.tau_peaks(LINEAR_TAIL);
    let m = |a: &DMatrix<f64>| [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]];
    let summary = LinearDemoSummary {
        settle_time_s: settle,
        settled: settle.is_some(),
        final_amplitude_ratio: traj.amplitude_ratio(0, 1, LINEAR_TAIL),
        peak_tau_inf: peak,
        trailing_tau_inf: trailing,
        eigenvalues: dec.lambdas.clone(),
        modes: m(&dec.vectors),
        gain: m(&gain),
    };
    Ok((traj, summary))
}

pub fn write_linear_csv(path: &Path, traj: &LinearTrajectory) -> Result<()> {
    let rows = (0..traj.len()).map(|i| {
        vec![traj.t[i], traj.x[i][0], traj.x[i][1], traj.v[i][0], traj.v[i][1], traj.tau[i][0], traj.tau[i][1], traj.distance[i]]
    });
    write_rows(path, &LINEAR_CSV_COLUMNS, rows)
}

// -------------------------------------------------------------------- sweeps

/// One swept parameter: a dotted path into the scenario JSON and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepParam {
    pub name: String,
    pub path: String,
    pub values: Vec<f64>,
}

/// Short names for the usual sweep targets.
pub fn param_alias(name: &str) -> Option<&'static str> {
    Some(match name {
        "alpha" | "gamma" => "controller.band.gamma",
        "kappa_d" => "controller.gains.kappa_d",
        "kappa_p" => "controller.gains.kappa_p",
        "e_lo" => "controller.band.e_lo",
        "e_hi" => "controller.band.e_hi",
        "dt" => "sim.dt",
        "t_end" => "sim.t_end",
        _ => return None,
    })
}

impl FromStr for SweepParam {
    type Err = Error;

    /// `name=v1,v2,...` where `name` is an alias or a dotted path.
    fn from_str(s: &str) -> Result<Self> {
        let (name, list) = s.split_once('=').ok_or_else(|| Error::Config(format!("sweep spec `{s}` is not name=v1,v2,...")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Config(format!("sweep spec `{s}` has no parameter name")));
        }
        let values = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|e| Error::Config(format!("sweep value `{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Config(format!("sweep over `{name}` has no values")));
        }
        let path = param_alias(name).unwrap_or(name).to_string();
        Ok(SweepParam { name: name.to_string(), path, values })
    }
}

/// Cartesian product of the parameter values, first parameter slowest.
pub fn sweep_points(params: &[SweepParam]) -> Result<Vec<Vec<f64>>> {
    if params.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    let mut points = vec![Vec::new()];
    for p in params {
        if p.values.is_empty() {
            return Err(Error::Config(format!("sweep over `{}` has no values", p.name)));
        }
        points = points.into_iter().flat_map(|pt| p.values.iter().map(move |&v| [pt.as_slice(), &[v]].concat())).collect();
    }
    Ok(points)
}

/// Sets an existing numeric field addressed by a dotted path.
pub fn with_param(cfg: &ScenarioConfig, path: &str, value: f64) -> Result<ScenarioConfig> {
    let mut json = serde_json::to_value(cfg)?;
    let mut node = &mut json;
    for key in path.split('.') {
        node = node.get_mut(key).ok_or_else(|| Error::Config(format!("sweep path `{path}` does not exist in the scenario")))?;
    }
    if !node.is_number() {
        return Err(Error::Config(format!("sweep path `{path}` is not a number")));
    }
    *node = serde_json::Value::from(value);
    let out: ScenarioConfig = serde_json::from_value(json).map_err(|e| Error::Config(e.to_string()))?;
    out.validate()?;
    Ok(out)
}

#[derive(Debug)]
pub struct SweepRun {
    pub index: usize,
    pub values: Vec<f64>,
    pub config: ScenarioConfig,
    pub result: Result<RunOutput>,
}

/// Runs every sweep point. Manifolds are obtained up front, one at a time,
/// so cache files have a single writer; the runs then execute in parallel.
pub fn run_sweep(base: &ScenarioConfig, params: &[SweepParam], opts: &RunOptions, cache_dir: Option<&Path>) -> Result<Vec<SweepRun>> {
    let points = sweep_points(params)?;
    let configs = points
        .iter()
        .map(|pt| params.iter().zip(pt).try_fold(base.clone(), |cfg, (p, &v)| with_param(&cfg, &p.path, v)))
        .collect::<Result<Vec<_>>>()?;
    let mut solved: Vec<(String, Result<ManifoldCoeffs, String>)> = Vec::new();
    let mut manifolds = Vec::with_capacity(configs.len());
    for cfg in &configs {
        if !cfg.needs_manifold() {
            manifolds.push(None);
            continue;
        }
        let key = cache_key(&cfg.model, cfg.manifold.center);
        let found = match solved.iter().find(|(k, _)| *k == key) {
            Some((_, r)) => r.clone(),
            None => {
                let r = obtain_manifold(&cfg.model, &cfg.manifold, cache_dir).map(|m| m.coeffs).map_err(|e| e.to_string());
                solved.push((key, r.clone()));
                r
            }
        };
        manifolds.push(Some(found));
    }
    Ok(configs
        .into_par_iter()
        .zip(manifolds)
        .zip(points)
        .enumerate()
        .map(|(index, ((config, manifold), values))| {
            let result = match manifold {
                None => run_with_manifold(&config, None, opts),
                Some(Ok(c)) => run_with_manifold(&config, Some(c), opts),
                Some(Err(msg)) => Err(Error::Config(format!("manifold unavailable: {msg}"))),
            };
            SweepRun { index, values, config, result }
        })
        .collect())
}

pub fn write_sweep_csv(path: &Path, params: &[SweepParam], runs: &[SweepRun]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header: Vec<String> = vec!["run".into()];
    header.extend(params.iter().map(|p| p.name.clone()));
    header.extend(
        ["status", "settle_time_s", "trailing_tau_inf", "E_M_final", "freq_theta_hz", "freq_r_hz", "amplitude_theta", "amplitude_variation", "max_ratio_soft_rigid"]
            .map(String::from),
    );
    writeln!(w, "{}", header.join(","))?;
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    for run in runs {
        let mut row = vec![run.index.to_string()];
        row.extend(run.values.iter().copied().map(fmt17));
        match &run.result {
            Ok(out) => {
                let s = &out.summary;
                row.push(if s.aborted.is_some() { "aborted".into() } else { "ok".into() });
                row.extend([
                    opt(s.settle_time_s),
                    fmt17(s.trailing_tau_inf),
                    opt(s.e_m_final),
                    opt(s.freq_theta_hz),
                    opt(s.freq_r_hz),
                    opt(s.amplitude_theta),
                    opt(s.amplitude_variation),
                    opt(s.max_ratio_soft_rigid),
                ]);
            }
            Err(_) => {
                row.push("error".into());
                row.extend(std::iter::repeat_n(String::new(), 8));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
