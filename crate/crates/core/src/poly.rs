//! Sparse multivariate polynomials with a total-degree bound.
//!
//! A [`Ring`] fixes the number of variables and which of them are *graded*:
//! only the first `graded` exponents count toward the degree bound, and any
//! product term exceeding `max_degree` in those variables is dropped. The
//! remaining variables are carried along untruncated, which lets the Galerkin
//! residuals keep the unknown manifold coefficients as symbols while the state
//! variables are truncated.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent tuple of a monomial.
pub type Exponents = Vec<u8>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ring {
    pub nvars: usize,
    pub graded: usize,
    pub max_degree: u32,
}

impl Ring {
    /// All variables graded.
    pub fn truncated(nvars: usize, max_degree: u32) -> Self {
        Self { nvars, graded: nvars, max_degree }
    }

    /// No degree bound at all.
    pub fn free(nvars: usize) -> Self {
        Self { nvars, graded: 0, max_degree: u32::MAX }
    }

    pub fn with_graded_prefix(nvars: usize, graded: usize, max_degree: u32) -> Self {
        assert!(graded <= nvars);
        Self { nvars, graded, max_degree }
    }

    pub fn zero(&self) -> MultiPoly {
        MultiPoly { ring: *self, terms: BTreeMap::new() }
    }

    pub fn constant(&self, c: f64) -> MultiPoly {
        self.monomial(&vec![0; self.nvars], c)
    }

    pub fn var(&self, i: usize) -> MultiPoly {
        assert!(i < self.nvars, "variable index {i} out of range");
        let mut e = vec![0; self.nvars];
        e[i] = 1;
        self.monomial(&e, 1.0)
    }

    pub fn monomial(&self, exps: &[u8], c: f64) -> MultiPoly {
        assert_eq!(exps.len(), self.nvars);
        let mut p = self.zero();
        p.add_term(exps.to_vec(), c);
        p
    }

    fn graded_degree(&self, exps: &[u8]) -> u32 {
        exps[..self.graded].iter().map(|&e| e as u32).sum()
    }

    fn admits(&self, exps: &[u8]) -> bool {
        self.graded_degree(exps) <= self.max_degree
    }
}

#[derive(Clone, PartialEq)]
pub struct MultiPoly {
    ring: Ring,
    terms: BTreeMap<Exponents, f64>,
}

impl MultiPoly {
    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&vec![0; self.ring.nvars])
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Total degree over all variables (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn all_finite(&self) -> bool {
        self.terms.values().all(|c| c.is_finite())
    }

    fn add_term(&mut self, exps: Exponents, c: f64) {
        if c == 0.0 || !self.ring.admits(&exps) {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, k: f64) -> MultiPoly {
        let mut out = self.ring.zero();
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    /// Drops coefficients with magnitude at or below `tol`.
    pub fn pruned(&self, tol: f64) -> MultiPoly {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > tol);
        out
    }

    pub fn derivative(&self, var: usize) -> MultiPoly {
        let mut out = self.ring.zero();
        for (e, &c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c * e[var] as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.ring.nvars);
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(x)
                    .fold(c, |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k as i32) })
            })
            .sum()
    }

    /// Substitutes variable `i` by `subs[i]`; the result lives in the ring of
    /// the substitutions.
    pub fn compose(&self, subs: &[MultiPoly]) -> MultiPoly {
        assert_eq!(subs.len(), self.ring.nvars);
        let target = subs[0].ring;
        assert!(subs.iter().all(|s| s.ring == target), "substitutions must share a ring");
        let mut powers: Vec<Vec<MultiPoly>> = subs.iter().map(|s| vec![target.constant(1.0), s.clone()]).collect();
        let mut out = target.zero();
        for (e, &c) in &self.terms {
            let mut term = target.constant(c);
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[v].len() <= k as usize {
                    let next = &powers[v][powers[v].len() - 1] * &subs[v];
                    powers[v].push(next);
                }
                term = &term * &powers[v][k as usize];
                if term.is_zero() {
                    break;
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Groups terms by their graded exponents. Each value is a polynomial in
    /// the ungraded variables, living in `coeff_ring` (which must have
    /// `nvars - graded` variables).
    pub fn split_graded(&self, coeff_ring: Ring) -> BTreeMap<Exponents, MultiPoly> {
        let g = self.ring.graded;
        assert_eq!(coeff_ring.nvars, self.ring.nvars - g);
        let mut out: BTreeMap<Exponents, MultiPoly> = BTreeMap::new();
        for (e, &c) in &self.terms {
            let key = e[..g].to_vec();
            out.entry(key).or_insert_with(|| coeff_ring.zero()).add_term(e[g..].to_vec(), c);
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Re-embeds the polynomial in another ring with the same variables
    /// (dropping terms the new bound does not admit).
    pub fn reembed(&self, ring: Ring) -> MultiPoly {
        assert_eq!(ring.nvars, self.ring.nvars);
        let mut out = ring.zero();
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    /// Applies the univariate Taylor series `coeffs` (about the constant term)
    /// to this polynomial: `sum_k coeffs[k] * (self - c0)^k`.
    pub(crate) fn apply_series(&self, coeffs: &[f64]) -> MultiPoly {
        assert_eq!(
            self.ring.graded, self.ring.nvars,
            "series composition needs every variable graded"
        );
        let c0 = self.constant_term();
        let q = self - &self.ring.constant(c0);
        let mut acc = self.ring.zero();
        for &a in coeffs.iter().rev() {
            acc = &(&acc * &q) + &self.ring.constant(a);
        }
        acc
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:e}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.ring, rhs.ring, "ring mismatch");
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl<'a> Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.ring, rhs.ring, "ring mismatch");
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.ring, rhs.ring, "ring mismatch");
        let ring = self.ring;
        let mut out = ring.zero();
        for (ea, &ca) in &self.terms {
            let da = ring.graded_degree(ea);
            for (eb, &cb) in &rhs.terms {
                if da + ring.graded_degree(eb) > ring.max_degree {
                    continue;
                }
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<f64> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: f64) -> MultiPoly {
                let c = self.ring.constant(rhs);
                (&self).$m(&c)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}
