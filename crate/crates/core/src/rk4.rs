//! Classical fixed-step fourth-order Runge-Kutta.

use crate::error::Result;

/// Scratch buffers for [`Rk4::step`], sized once per integration.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` by one step of size `dt` for `y' = f(t, y)`.
    #[allow(clippy::needless_range_loop)]
    pub fn step<F>(&mut self, mut f: F, t: f64, y: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        f(t, y, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k1[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k2[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Number of steps for horizon `t_end` at step `dt`, tolerant of rounding.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt - 1e-9).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        // y'' = -y, exact y = cos t
        let run = |dt: f64| {
            let mut rk = Rk4::new(2);
            let mut y = [1.0, 0.0];
            let n = step_count(2.0, dt);
            for i in 0..n {
                rk.step(
                    |_, y, dy| {
                        dy[0] = y[1];
                        dy[1] = -y[0];
                        Ok(())
                    },
                    i as f64 * dt,
                    &mut y,
                    dt,
                )
                .unwrap();
            }
            (y[0] - 2.0f64.cos()).abs()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_rounds_sensibly() {
        assert_eq!(step_count(10.0, 1e-4), 100_000);
        assert_eq!(step_count(1.0, 0.3), 4);
    }
}
