//! Scalar abstraction shared by plain `f64` evaluation and truncated Taylor
//! polynomials, so each model writes its equations of motion once.

use std::ops::{Add, Mul, Neg, Sub};

use crate::poly::MultiPoly;

pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn recip(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn acos(&self) -> Self;

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn div(&self, rhs: &Self) -> Self {
        self.clone() * rhs.recip()
    }
}

impl Scalar for f64 {
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn acos(&self) -> Self {
        f64::acos(*self)
    }
}

/// Elementary functions with known univariate Taylor series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Recip,
    Sin,
    Cos,
    Sqrt,
    Acos,
}

/// Taylor coefficients `a_k = f^(k)(c) / k!` for `k = 0..=order`.
///
/// Non-finite coefficients signal that `c` is outside the analytic domain.
pub fn taylor_coeffs(f: Elementary, c: f64, order: usize) -> Vec<f64> {
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order + 1);
    match f {
        Elementary::Recip => {
            for k in 0..=order {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                out.push(sign / c.powi(k as i32 + 1));
            }
        }
        Elementary::Sin | Elementary::Cos => {
            let (s, co) = c.sin_cos();
            let cycle = match f {
                Elementary::Sin => [s, co, -s, -co],
                _ => [co, -s, -co, s],
            };
            for k in 0..=order {
                if k > 0 {
                    fact *= k as f64;
                }
                out.push(cycle[k % 4] / fact);
            }
        }
        Elementary::Sqrt => {
            // binom(1/2, k) c^(1/2 - k)
            let mut binom = 1.0;
            for k in 0..=order {
                if k > 0 {
                    binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                }
                out.push(binom * c.powf(0.5 - k as f64));
            }
        }
        Elementary::Acos => {
            out.push(c.acos());
            if order == 0 {
                return out;
            }
            // acos' = -(1 - x^2)^(-1/2); expand w(t) = (1 - c^2) - 2ct - t^2.
            let w0 = 1.0 - c * c;
            let n = order; // derivative series needs order - 1 terms; keep one spare
            let s = {
                let mut s = vec![0.0; n];
                if n > 1 {
                    s[1] = -2.0 * c / w0;
                }
                if n > 2 {
                    s[2] = -1.0 / w0;
                }
                s
            };
            // (1 + s)^(-1/2) = sum_j binom(-1/2, j) s^j
            let mut g = vec![0.0; n];
            let mut s_pow = vec![0.0; n];
            s_pow[0] = 1.0;
            let mut binom = 1.0;
            for j in 0..n {
                if j > 0 {
                    binom *= (-0.5 - (j as f64 - 1.0)) / j as f64;
                    s_pow = series_mul(&s_pow, &s);
                }
                for (gi, si) in g.iter_mut().zip(&s_pow) {
                    *gi += binom * si;
                }
            }
            let scale = w0.powf(-0.5);
            for (k, gk) in g.iter().enumerate().take(order) {
                out.push(-gk * scale / (k as f64 + 1.0));
            }
        }
    }
    out
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

impl MultiPoly {
    fn elementary(&self, f: Elementary) -> MultiPoly {
        let order = self.ring().max_degree as usize;
        self.apply_series(&taylor_coeffs(f, self.constant_term(), order))
    }
}

impl Scalar for MultiPoly {
    fn recip(&self) -> Self {
        self.elementary(Elementary::Recip)
    }
    fn sin(&self) -> Self {
        self.elementary(Elementary::Sin)
    }
    fn cos(&self) -> Self {
        self.elementary(Elementary::Cos)
    }
    fn sqrt(&self) -> Self {
        self.elementary(Elementary::Sqrt)
    }
    fn acos(&self) -> Self {
        self.elementary(Elementary::Acos)
    }
}
