//! Sparse bivariate polynomials, used for Hamiltonians so that their partial
//! derivatives are taken term by term instead of by differencing.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// `sum c_{ij} x^i y^j`, zero coefficients pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2<S> {
    terms: BTreeMap<(u32, u32), S>,
}

impl<S: Scalar> Poly2<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: S) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(S::one(), 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(S::one(), 0, 1)
    }

    pub fn monomial(c: S, i: u32, j: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: S) {
        let entry = self.terms.entry((i, j)).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn coeff(&self, i: u32, j: u32) -> S {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &S)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree in `(x, y)`; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(i, j)| i + j).max()
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero();
        for (&(i, j), v) in &self.terms {
            out.add_term(i, j, v.clone() * c.clone());
        }
        out
    }

    pub fn eval(&self, x: &S, y: &S) -> S {
        self.terms.iter().fold(S::zero(), |acc, (&(i, j), c)| {
            acc + c.clone() * pow(x, i) * pow(y, j)
        })
    }

    pub fn d_dx(&self) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            if i > 0 {
                out.add_term(i - 1, j, c.clone() * S::from_i64(i as i64));
            }
        }
        out
    }

    pub fn d_dy(&self) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            if j > 0 {
                out.add_term(i, j - 1, c.clone() * S::from_i64(j as i64));
            }
        }
        out
    }
}

fn pow<S: Scalar>(v: &S, n: u32) -> S {
    (0..n).fold(S::one(), |acc, _| acc * v.clone())
}

impl<S: Scalar> Add for Poly2<S> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for ((i, j), c) in rhs.terms {
            self.add_term(i, j, c);
        }
        self
    }
}

impl<S: Scalar> Neg for Poly2<S> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(&-S::one())
    }
}

impl<S: Scalar> Sub for Poly2<S> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: Scalar> Mul for Poly2<S> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<S: Scalar> Mul for &Poly2<S> {
    type Output = Poly2<S>;

    fn mul(self, rhs: Self) -> Poly2<S> {
        let mut out = Poly2::zero();
        for (&(i, j), a) in &self.terms {
            for (&(k, l), b) in &rhs.terms {
                out.add_term(i + k, j + l, a.clone() * b.clone());
            }
        }
        out
    }
}

impl<S: Scalar> std::iter::Product for Poly2<S> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::constant(S::one()), |a, b| a * b)
    }
}

impl<S: Scalar> std::iter::Sum for Poly2<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}
