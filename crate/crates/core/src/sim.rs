//! Closed-loop simulation of the 2-DoF models and trajectory metrics.

use serde::{Deserialize, Serialize};

use crate::control::Displacement;
use crate::error::{Error, Result};
use crate::manifold::ManifoldCoeffs;
use crate::models::{Model2Dof, State2};
use crate::rk4::{step_count, Rk4};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_dt() -> f64 {
    1e-4
}

fn default_stride() -> usize {
    10
}

impl SimSettings {
    pub fn new(t_end: f64) -> Self {
        Self { dt: default_dt(), t_end, record_stride: default_stride() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_end >= self.dt && self.t_end.is_finite() && self.record_stride >= 1) {
            return Err(Error::InvalidArgument(format!("need dt > 0, t_end >= dt, stride >= 1: {self:?}")));
        }
        Ok(())
    }
}

/// Torque law evaluated at every Runge-Kutta stage.
pub trait Controller: Sync {
    fn torque(&self, s: &State2) -> Result<[f64; 2]>;
}

/// Open loop.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoControl;

impl Controller for NoControl {
    fn torque(&self, _s: &State2) -> Result<[f64; 2]> {
        Ok([0.0, 0.0])
    }
}

impl<T: Controller + ?Sized> Controller for &T {
    fn torque(&self, s: &State2) -> Result<[f64; 2]> {
        (**self).torque(s)
    }
}

impl<T: Controller + ?Sized> Controller for Box<T> {
    fn torque(&self, s: &State2) -> Result<[f64; 2]> {
        (**self).torque(s)
    }
}

/// Recorded samples. Manifold-related columns are NaN when no manifold was
/// supplied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<State2>,
    pub torques: Vec<[f64; 2]>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub delta: Vec<f64>,
    pub ddelta: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_m: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push<M: Model2Dof>(&mut self, model: &M, manifold: Option<&ManifoldCoeffs>, t: f64, s: State2, tau: [f64; 2]) {
        self.t.push(t);
        self.states.push(s);
        self.torques.push(tau);
        self.energy.push(model.energy(&s));
        match manifold {
            Some(c) => {
                let (x, xd) = c.eval(s.q1, s.dq1);
                let d = Displacement::of(c, &s);
                self.x.push(x);
                self.xdot.push(xd);
                self.delta.push(d.delta);
                self.ddelta.push(d.ddelta);
                self.energy_m.push(model.energy(&c.lift(s.q1, s.dq1)));
            }
            None => {
                for v in [&mut self.x, &mut self.xdot, &mut self.delta, &mut self.ddelta, &mut self.energy_m] {
                    v.push(f64::NAN);
                }
            }
        }
    }

    pub fn channel(&self, ch: Channel) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| match ch {
                Channel::Theta => s.q1,
                Channel::Radius => s.q2,
            })
            .collect()
    }

    /// Index of the first sample of the trailing `fraction` of the run.
    pub fn tail_start(&self, fraction: f64) -> usize {
        let n = self.len();
        n - ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1))
    }
}

/// A run that stopped early; the partial trajectory is kept for diagnosis.
pub struct SimAbort {
    pub partial: Trajectory,
    pub error: Error,
}

impl From<SimAbort> for Error {
    fn from(a: SimAbort) -> Self {
        a.error
    }
}

impl std::fmt::Debug for SimAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimAbort")
            .field("samples", &self.partial.len())
            .field("error", &self.error)
            .finish()
    }
}

impl std::fmt::Display for SimAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.partial.t.last().copied().unwrap_or(0.0);
        write!(f, "simulation aborted after t = {t}: {}", self.error)
    }
}

/// Fixed-step RK4 with the controller evaluated at each stage.
#[allow(clippy::result_large_err)]
pub fn integrate<M: Model2Dof, C: Controller + ?Sized>(
    model: &M,
    manifold: Option<&ManifoldCoeffs>,
    controller: &C,
    s0: State2,
    settings: &SimSettings,
) -> std::result::Result<Trajectory, SimAbort> {
    let mut traj = Trajectory::default();
    let abort = |traj: Trajectory, error: Error| SimAbort { partial: traj, error };
    if let Err(e) = settings.validate().and_then(|_| model.check_domain(s0.q2)) {
        return Err(abort(traj, e));
    }
    if !s0.is_finite() {
        return Err(abort(traj, Error::NonFinite { t: 0.0 }));
    }
    let tau0 = match controller.torque(&s0) {
        Ok(t) => t,
        Err(e) => return Err(abort(traj, e)),
    };
    traj.push(model, manifold, 0.0, s0, tau0);

    let mut y = s0.to_array();
    let mut rk = Rk4::new(4);
    let dt = settings.dt;
    let steps = step_count(settings.t_end, dt);
    for i in 0..steps {
        let t = i as f64 * dt;
        let res = rk.step(
            |_, y, dy| {
                let s = State2::from_slice(y);
                let tau = controller.torque(&s)?;
                let [a1, a2] = model.accel(&s, tau)?;
                dy[0] = y[1];
                dy[1] = a1;
                dy[2] = y[3];
                dy[3] = a2;
                Ok(())
            },
            t,
            &mut y,
            dt,
        );
        if let Err(e) = res {
            return Err(abort(traj, e));
        }
        let t_next = (i + 1) as f64 * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(abort(traj, Error::NonFinite { t: t_next }));
        }
        if (i + 1) % settings.record_stride == 0 || i + 1 == steps {
            let s = State2::from_slice(&y);
            match controller.torque(&s) {
                Ok(tau) => traj.push(model, manifold, t_next, s, tau),
                Err(e) => return Err(abort(traj, e)),
            }
        }
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Theta,
    Radius,
}

/// Upward crossings of the mean, with linear interpolation.
fn upward_crossings(t: &[f64], v: &[f64]) -> (Vec<f64>, usize) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mut ups = Vec::new();
    let mut all = 0;
    for k in 1..v.len() {
        let (a, b) = (v[k - 1] - mean, v[k] - mean);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            all += 1;
            if a < 0.0 {
                ups.push(t[k - 1] + (t[k] - t[k - 1]) * (-a) / (b - a));
            }
        }
    }
    (ups, all)
}

/// Oscillation frequency (Hz) of one coordinate over the trailing half of
/// the run, from the mean spacing of upward mean-crossings.
pub fn frequency_estimate(traj: &Trajectory, channel: Channel) -> Result<f64> {
    let start = traj.tail_start(0.5);
    let v = traj.channel(channel);
    let (ups, all) = upward_crossings(&traj.t[start..], &v[start..]);
    if all < 4 || ups.len() < 2 {
        return Err(Error::InsufficientCrossings { found: all, needed: 4 });
    }
    Ok((ups.len() - 1) as f64 / (ups[ups.len() - 1] - ups[0]))
}

/// Amplitude of a settled oscillation over its last few cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitCycle {
    /// Mean half peak-to-peak amplitude.
    pub amplitude: f64,
    /// `(max - min) / mean` of the per-cycle amplitudes.
    pub variation: f64,
    pub cycles: usize,
}

/// Half peak-to-peak amplitude of each full cycle in the trailing half,
/// cycles delimited by upward crossings of the mean.
pub fn cycle_amplitudes(traj: &Trajectory, channel: Channel) -> Vec<f64> {
    let start = traj.tail_start(0.5);
    let v = &traj.channel(channel)[start..];
    if v.len() < 3 {
        return Vec::new();
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let ups: Vec<usize> = (1..v.len()).filter(|&k| v[k - 1] < mean && v[k] >= mean).collect();
    ups.windows(2)
        .map(|w| {
            let seg = &v[w[0]..w[1]];
            let (lo, hi) = seg.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            0.5 * (hi - lo)
        })
        .collect()
}

pub fn limit_cycle(traj: &Trajectory, channel: Channel, cycles: usize) -> Result<LimitCycle> {
    let amps = cycle_amplitudes(traj, channel);
    if cycles == 0 || amps.len() < cycles {
        return Err(Error::InsufficientCrossings { found: amps.len() + 1, needed: cycles + 1 });
    }
    let last = &amps[amps.len() - cycles..];
    let amplitude = last.iter().sum::<f64>() / cycles as f64;
    let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    Ok(LimitCycle { amplitude, variation: (hi - lo) / amplitude, cycles })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// First time after which `|Delta| + |Delta_dot|` stays below 1% of its
    /// initial value; `None` if it never does.
    pub settle_time: Option<f64>,
    /// Largest `|Delta|` over the trailing 20%.
    pub steady_delta: f64,
    /// Largest `|tau|_inf` over the trailing 20%.
    pub trailing_tau_inf: f64,
}

/// A start closer than this to the manifold counts as already settled.
const ON_MANIFOLD: f64 = 1e-9;

pub fn convergence_metrics(traj: &Trajectory) -> Result<ConvergenceReport> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let norms: Vec<f64> = traj.delta.iter().zip(&traj.ddelta).map(|(d, dd)| d.abs() + dd.abs()).collect();
    let tail = traj.tail_start(0.2);
    let steady_delta = traj.delta[tail..].iter().fold(0.0, |m: f64, d| m.max(d.abs()));
    let trailing_tau_inf = traj.torques[tail..].iter().fold(0.0, |m: f64, t| m.max(t[0].abs()).max(t[1].abs()));
    let d0 = norms[0];
    let settle_time = if d0.is_nan() {
        None
    } else if d0 < ON_MANIFOLD {
        Some(traj.t[0])
    } else {
        let thresh = 0.01 * d0;
        match norms.iter().rposition(|&n| !(n < thresh)) {
            None => Some(traj.t[0]),
            Some(i) if i + 1 < norms.len() => Some(traj.t[i + 1]),
            Some(_) => None,
        }
    };
    Ok(ConvergenceReport { settle_time, steady_delta, trailing_tau_inf })
}
