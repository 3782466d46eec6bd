//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nnm::manifold::ManifoldCoeffs;
use nnm::poly::{MultiPoly, Ring};
use nnm::PendulumParams;

/// Classical RK4 on a small state vector, written out longhand so that the
/// library integrator is not its own oracle.
pub fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y0: [f64; N], dt: f64, steps: usize, mut visit: impl FnMut(usize, &[f64; N])) -> [f64; N] {
    let mut y = y0;
    visit(0, &y);
    let axpy = |y: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    for n in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, dt / 2.0));
        let k3 = f(&axpy(&y, &k2, dt / 2.0));
        let k4 = f(&axpy(&y, &k3, dt));
        for i in 0..N {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        visit(n + 1, &y);
    }
    y
}

/// Free pendulum vector field in `(theta, theta_dot, r, r_dot)`.
pub fn pendulum_field(p: &PendulumParams) -> impl Fn(&[f64; 4]) -> [f64; 4] + '_ {
    move |y| {
        let [th, dth, r, dr] = *y;
        [
            dth,
            -2.0 * dr / r * dth + p.g / r * th.sin() - p.kappa1 * th / (r * r),
            dr,
            r * dth * dth - p.g * th.cos() - p.kappa2 * (r - p.r0),
        ]
    }
}

/// Reduced angular dynamics on a polynomial manifold, from the closed form
/// `theta_ddot = -2 (Xdot / X) theta_dot + (g X sin(theta) - kappa1 theta) / X^2`.
pub fn reduced_field<'a>(p: &'a PendulumParams, c: &'a ManifoldCoeffs) -> impl Fn(&[f64; 2]) -> [f64; 2] + 'a {
    move |y| {
        let [th, dth] = *y;
        let (x, xd) = c.eval(th, dth);
        [dth, -2.0 * xd / x * dth + (p.g * x * th.sin() - p.kappa1 * th) / (x * x)]
    }
}

pub fn pendulum_energy(p: &PendulumParams, y: &[f64; 4]) -> f64 {
    let [th, dth, r, dr] = *y;
    0.5 * (r * r * dth * dth + dr * dr) + 0.5 * (p.kappa1 * th * th + p.kappa2 * (r - p.r0).powi(2)) + p.g * r * th.cos()
}

/// Radius at `theta = 0` of the exact symmetric periodic orbit through
/// `(0, v)`: the orbit turns (`theta_dot = 0`) with `r_dot = 0`. Found by
/// secant iteration on the turning-point radial velocity.
pub fn shoot_mode_radius(p: &PendulumParams, v: f64, guess: f64) -> f64 {
    let f = pendulum_field(p);
    let turning_rdot = |r: f64| {
        let dt = 1e-4;
        let mut y = [0.0, v, r, 0.0];
        for _ in 0..200_000 {
            let prev = y;
            y = rk4(&f, y, dt, 1, |_, _| {});
            if prev[1] > 0.0 && y[1] <= 0.0 {
                let s = prev[1] / (prev[1] - y[1]);
                return prev[3] + s * (y[3] - prev[3]);
            }
        }
        panic!("no turning point");
    };
    let (mut a, mut b) = (guess - 0.02, guess + 0.02);
    let (mut fa, mut fb) = (turning_rdot(a), turning_rdot(b));
    for _ in 0..50 {
        if fb.abs() < 1e-14 || fa == fb {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        (a, fa) = (b, fb);
        b = c;
        fb = turning_rdot(b);
    }
    b
}

/// The sixteen matched-coefficient equations transcribed by hand from the
/// reference listing, with the auxiliary constants `d1..d7` (of which
/// `d5..d7` depend on the unknowns). Unknown order:
/// a3 a4 a5 a10 a11 a12 a13 a14 b3 b4 b5 b10 b11 b12 b13 b14.
pub fn reference_residual_system(p: &PendulumParams) -> Vec<MultiPoly> {
    let ring = Ring::free(16);
    let v = |i: usize| ring.var(i);
    let k = |c: f64| ring.constant(c);
    let (a3, a4, a5, a10, a11, a12, a13, a14) = (v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7));
    let (b3, b4, b5, b10, b11, b12, b13, b14) = (v(8), v(9), v(10), v(11), v(12), v(13), v(14), v(15));
    let PendulumParams { kappa1: k1, kappa2: k2, g, r0 } = *p;

    let d1 = g * (1.0 / r0 + g / (k2 * r0 * r0) + g * g / (k2 * k2 * r0.powi(3)))
        - k1 * (1.0 / (r0 * r0) + 2.0 * g / (k2 * r0.powi(3)) + 3.0 * g * g / (k2 * k2 * r0.powi(4)));
    let d2 = 1.0 / (r0 * r0) + 2.0 * g / (k2 * r0.powi(3));
    let d3 = 1.0 / r0 + g / (k2 * r0 * r0);
    let d4 = 2.0 / r0.powi(3) + 6.0 * g / (k2 * r0.powi(4));
    let d5 = b3.scale(2.0 * d3) + a4.scale(g * d2) - a4.scale(k1 * d4);
    let d6 = a3.scale(g * d2) - a3.scale(k1 * d4) + k(g / (6.0 * r0));
    let d7 = b4.scale(2.0 * d3) + a5.scale(g * d2) - a5.scale(k1 * d4);

    let m = |a: &MultiPoly, b: &MultiPoly| a * b;
    vec![
        &(&b10 - &a13.scale(d1)) + &m(&a4, &d6),
        &(&(&(&b13 - &a10.scale(4.0)) - &a12.scale(2.0 * d1)) + &m(&a4, &d5)) + &m(&a5, &d6).scale(2.0),
        &(&(&(&b12 - &a13.scale(3.0)) - &a11.scale(3.0 * d1)) + &m(&a5, &d5).scale(2.0)) + &m(&a4, &d7),
        &b3 - &a4.scale(d1),
        &(&(&(&b11 - &a12.scale(2.0)) - &a14.scale(4.0 * d1)) + &m(&a5, &d7).scale(2.0)) + &m(&a4, &b5).scale(2.0 * d3),
        &(&b4 - &a3.scale(2.0)) - &a5.scale(2.0 * d1),
        &(&b14 - &a11) + &m(&a5, &b5).scale(4.0 * d3),
        &b5 - &a4,
        &(&m(&b4, &d6) - &b13.scale(d1)) - &a10.scale(k2),
        &(&(&(&m(&b4, &d5) - &a13.scale(k2)) - &b12.scale(2.0 * d1)) - &b10.scale(4.0)) + &m(&b5, &d6).scale(2.0),
        &(&(&(&(&a3 - &b13.scale(3.0)) - &a12.scale(k2)) - &b11.scale(3.0 * d1)) + &m(&b5, &d5).scale(2.0)) + &m(&b4, &d7),
        &(&k(g) - &a3.scale(2.0 * k2)) - &b4.scale(2.0 * d1),
        &(&(&(&(&a4 - &b12.scale(2.0)) - &a11.scale(k2)) - &b14.scale(4.0 * d1)) + &m(&b5, &d7).scale(2.0)) + &m(&b4, &b5).scale(2.0 * d3),
        &(&b3.scale(2.0) + &a4.scale(k2)) + &b5.scale(2.0 * d1),
        &(&(&a5 - &b11) - &a14.scale(k2)) + &m(&b5, &b5).scale(4.0 * d3),
        &(&(&k(r0) - &b4) - &a5.scale(k2)) - &k(g / k2),
    ]
}

/// Largest coefficient difference between two polynomials over the union of
/// their supports.
pub fn max_coeff_diff(a: &MultiPoly, b: &MultiPoly) -> f64 {
    (a - b).max_abs_coeff()
}
