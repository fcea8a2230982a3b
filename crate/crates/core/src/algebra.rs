//! The affine algebra of type D4^(1), realized as so(8)-valued Laurent
//! polynomials in `z` extended by the central element `K` and the derivation
//! `d = z d/dz`.
//!
//! `so(8)` is taken with respect to the anti-diagonal form `S`, i.e.
//! `X^T S + S X = 0`. With this choice the upper triangular matrices span a
//! Borel subalgebra of the finite part, and root vectors have exactly two
//! nonzero entries.
//!
//! The bracket is
//!
//! ```text
//! [X z^m + aK + bd, Y z^n + a'K + b'd]
//!     = [X, Y] z^(m+n) + m delta(m+n, 0) <X|Y> K + b n Y z^n - b' m X z^m
//! ```
//!
//! and the invariant form is `(X z^m + aK + bd | Y z^n + a'K + b'd)
//! = delta(m+n, 0) <X|Y> + a b' + a' b`, with `<X|Y> = tr(XY) / 2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Size of the defining representation.
pub const DIM: usize = 8;

/// Default bound on `|z-degree|` for materialized graded components.
pub const DEFAULT_DEGREE_CAP: i32 = 8;

/// Hard cap on the number of terms of a nilpotent adjoint exponential.
pub const DEFAULT_SERIES_CAP: usize = 16;

/// The generalized Cartan matrix of type D4^(1), nodes ordered 0..=4 with 2
/// the central node.
pub const CARTAN: [[i64; 5]; 5] = [
    [2, 0, -1, 0, 0],
    [0, 2, -1, 0, 0],
    [-1, -1, 2, -1, -1],
    [0, 0, -1, 2, 0],
    [0, 0, -1, 0, 2],
];

/// Dual Kac labels: `K = sum_i MARKS[i] * coroot_i`.
pub const MARKS: [i64; 5] = [1, 1, 2, 1, 1];

/// Index `i` paired with `partner(i)` by the anti-diagonal form.
pub const fn partner(i: usize) -> usize {
    DIM - 1 - i
}

/// Key of a single matrix cell of a Laurent coefficient.
pub type CellKey = (i32, u8, u8);

/// An element of the centrally extended loop algebra.
///
/// Zero entries are never stored, so structural equality is mathematical
/// equality for exact scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<S> {
    cells: BTreeMap<CellKey, S>,
    central: S,
    derivation: S,
}

impl<S: Scalar> Default for Element<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> Element<S> {
    pub fn zero() -> Self {
        Self {
            cells: BTreeMap::new(),
            central: S::zero(),
            derivation: S::zero(),
        }
    }

    /// The canonical central element `K`.
    pub fn central_unit() -> Self {
        Self {
            central: S::one(),
            ..Self::zero()
        }
    }

    /// The scaling element `d`.
    pub fn derivation_unit() -> Self {
        Self {
            derivation: S::one(),
            ..Self::zero()
        }
    }

    /// Builds an element from raw cells; repeated keys accumulate.
    pub fn from_parts(cells: impl IntoIterator<Item = (CellKey, S)>, central: S, derivation: S) -> Self {
        let mut out = Self {
            cells: BTreeMap::new(),
            central,
            derivation,
        };
        for (key, v) in cells {
            out.add_cell(key, v);
        }
        out
    }

    pub fn from_cells(cells: impl IntoIterator<Item = (CellKey, S)>) -> Self {
        Self::from_parts(cells, S::zero(), S::zero())
    }

    fn add_cell(&mut self, key: CellKey, v: S) {
        if v.is_zero() {
            return;
        }
        let sum = match self.cells.remove(&key) {
            Some(old) => old + v,
            None => v,
        };
        if !sum.is_zero() {
            self.cells.insert(key, sum);
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &S)> {
        self.cells.iter()
    }

    pub fn cell(&self, degree: i32, row: usize, col: usize) -> S {
        self.cells
            .get(&(degree, row as u8, col as u8))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Coefficient of `K`.
    pub fn central(&self) -> &S {
        &self.central
    }

    /// Coefficient of `d`.
    pub fn derivation(&self) -> &S {
        &self.derivation
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty() && self.central.is_zero() && self.derivation.is_zero()
    }

    /// The loop part only (drops `K` and `d`).
    pub fn loop_part(&self) -> Self {
        Self {
            cells: self.cells.clone(),
            central: S::zero(),
            derivation: S::zero(),
        }
    }

    /// Everything except the `K` coefficient.
    pub fn without_central(&self) -> Self {
        Self {
            central: S::zero(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self::from_parts(
            self.cells.iter().map(|(k, v)| (*k, v.clone() * s.clone())),
            self.central.clone() * s.clone(),
            self.derivation.clone() * s.clone(),
        )
    }

    pub fn scale_i(&self, n: i64) -> Self {
        self.scale(&S::from_i64(n))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: &S, other: &Self) -> Self {
        self.clone() + other.scale(s)
    }

    /// Largest absolute coefficient over cells, `K` and `d`.
    pub fn max_abs(&self) -> f64 {
        self.cells
            .values()
            .chain([&self.central, &self.derivation])
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|z-degree|` carrying a cell.
    pub fn max_abs_degree(&self) -> i32 {
        self.cells.keys().map(|k| k.0.abs()).max().unwrap_or(0)
    }

    pub fn check_degree_cap(&self, cap: i32) -> Result<()> {
        match self.cells.keys().map(|k| k.0).find(|m| m.abs() > cap) {
            Some(degree) => Err(Error::DegreeCap { degree, cap }),
            None => Ok(()),
        }
    }

    /// Checks `X^T S + S X = 0` for every Laurent coefficient.
    pub fn in_so8(&self) -> bool {
        // (S X)_{ij} = X_{i'j}; antisymmetry reads X_{i'j} = -X_{j'i}.
        self.cells.iter().all(|(&(m, a, b), v)| {
            let (a, b) = (a as usize, b as usize);
            let mirror = self.cell(m, partner(b), partner(a));
            (mirror + v.clone()).is_zero()
        })
    }

    /// The Lie bracket.
    pub fn bracket(&self, other: &Self) -> Self {
        let scale = trace_scale::<S>();
        let mut out = Self::zero();
        for (&(m, a, b), u) in &self.cells {
            for (&(n, c, d), v) in &other.cells {
                let uv = u.clone() * v.clone();
                if b == c {
                    out.add_cell((m + n, a, d), uv.clone());
                }
                if d == a {
                    out.add_cell((m + n, c, b), -uv.clone());
                }
                if m + n == 0 && m != 0 && b == c && a == d {
                    out.central = out.central.clone() + S::from_i64(m as i64) * scale.clone() * uv;
                }
            }
        }
        if !self.derivation.is_zero() {
            for (&(n, c, d), v) in &other.cells {
                if n != 0 {
                    out.add_cell((n, c, d), self.derivation.clone() * S::from_i64(n as i64) * v.clone());
                }
            }
        }
        if !other.derivation.is_zero() {
            for (&(m, a, b), u) in &self.cells {
                if m != 0 {
                    out.add_cell((m, a, b), -(other.derivation.clone() * S::from_i64(m as i64) * u.clone()));
                }
            }
        }
        out
    }

    /// The normalized invariant bilinear form.
    pub fn form(&self, other: &Self) -> S {
        trace_product(self, other) * trace_scale::<S>()
            + self.central.clone() * other.derivation.clone()
            + other.central.clone() * self.derivation.clone()
    }

    /// Converts the scalar field.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Element<T> {
        Element::from_parts(
            self.cells.iter().map(|(k, v)| (*k, f(v))),
            f(&self.central),
            f(&self.derivation),
        )
    }

    /// Debug dump: one `cell <degree> <row> <col> <value>` line per nonzero
    /// entry, then `K <value>` and `d <value>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (&(m, a, b), v) in &self.cells {
            let _ = writeln!(out, "cell {m} {a} {b} {}", v.dump());
        }
        let _ = writeln!(out, "K {}", self.central.dump());
        let _ = writeln!(out, "d {}", self.derivation.dump());
        out
    }
}

impl Element<Rational> {
    pub fn to_f64(&self) -> Element<f64> {
        self.map(Scalar::to_f64)
    }

    /// Parses the output of [`Element::dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Defect(format!("malformed dump line `{line}`"));
        let rational = |s: &str, line: &str| -> Result<Rational> { s.parse::<Rational>().map_err(|_| bad(line)) };
        let mut out = Self::zero();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["cell", m, a, b, v] => {
                    let m: i32 = m.parse().map_err(|_| bad(line))?;
                    let a: u8 = a.parse().map_err(|_| bad(line))?;
                    let b: u8 = b.parse().map_err(|_| bad(line))?;
                    if a as usize >= DIM || b as usize >= DIM {
                        return Err(bad(line));
                    }
                    out.add_cell((m, a, b), rational(v, line)?);
                }
                ["K", v] => out.central = rational(v, line)?,
                ["d", v] => out.derivation = rational(v, line)?,
                _ => return Err(bad(line)),
            }
        }
        Ok(out)
    }
}

impl<S: Scalar> Add for Element<S> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for (k, v) in rhs.cells {
            self.add_cell(k, v);
        }
        self.central = self.central + rhs.central;
        self.derivation = self.derivation + rhs.derivation;
        self
    }
}

impl<S: Scalar> Sub for Element<S> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: Scalar> Neg for Element<S> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            cells: self.cells.into_iter().map(|(k, v)| (k, -v)).collect(),
            central: -self.central,
            derivation: -self.derivation,
        }
    }
}

impl<S: Scalar> std::iter::Sum for Element<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// `sum_m tr(X_m Y_{-m})` over the Laurent coefficients.
fn trace_product<S: Scalar>(x: &Element<S>, y: &Element<S>) -> S {
    let mut acc = S::zero();
    for (&(m, a, b), u) in &x.cells {
        for (&(n, c, d), v) in &y.cells {
            if m + n == 0 && b == c && a == d {
                acc = acc + u.clone() * v.clone();
            }
        }
    }
    acc
}

/// `c` in `<X|Y> = c tr(XY)`; fixed by `(e_i|f_i) = 1`.
pub fn trace_scale<S: Scalar>() -> S {
    S::ratio(1, 2)
}

/// Which positive root a finite root vector belongs to, in epsilon
/// coordinates (0-based indices).
#[derive(Clone, Copy, Debug)]
enum Root {
    /// eps_i - eps_j, i < j
    Minus(usize, usize),
    /// eps_i + eps_j, i < j
    Plus(usize, usize),
}

fn root_vector<S: Scalar>(root: Root, degree: i32) -> Element<S> {
    let cell = |r: usize, c: usize| (degree, r as u8, c as u8);
    match root {
        Root::Minus(i, j) => Element::from_cells([
            (cell(i, j), S::one()),
            (cell(partner(j), partner(i)), -S::one()),
        ]),
        Root::Plus(i, j) => Element::from_cells([
            (cell(i, partner(j)), S::one()),
            (cell(j, partner(i)), -S::one()),
        ]),
    }
}

/// Transposes every Laurent coefficient and shifts the z-degree.
fn transpose_shift<S: Scalar>(x: &Element<S>, degree: i32) -> Element<S> {
    Element::from_cells(x.cells().map(|(&(m, a, b), v)| ((m + degree, b, a), v.clone())))
}

/// Chevalley generators, coroots, `d` and `K`.
#[derive(Clone, Debug)]
pub struct ChevalleyBasis<S> {
    pub e: [Element<S>; 5],
    pub f: [Element<S>; 5],
    pub coroot: [Element<S>; 5],
    pub d: Element<S>,
    pub k: Element<S>,
}

impl<S: Scalar> ChevalleyBasis<S> {
    /// `e_{2j} = [e_2, e_j]`.
    pub fn e2(&self, j: usize) -> Element<S> {
        self.e[2].bracket(&self.e[j])
    }

    /// `f_{2j} = [f_2, f_j]`.
    pub fn f2(&self, j: usize) -> Element<S> {
        self.f[2].bracket(&self.f[j])
    }

    /// The eleven generators `e_i`, `f_i`, `d`.
    pub fn generators(&self) -> Vec<Element<S>> {
        self.e
            .iter()
            .chain(self.f.iter())
            .cloned()
            .chain(std::iter::once(self.d.clone()))
            .collect()
    }

    /// `sum_i c_i coroot_i`.
    pub fn coroot_combination(&self, coeffs: &[S; 5]) -> Element<S> {
        self.coroot.iter().zip(coeffs).map(|(h, c)| h.scale(c)).sum()
    }
}

/// Builds the generators of g(D4^(1)) and verifies every defining relation.
///
/// Finite simple roots: node 1 = eps1 - eps2, node 2 = eps2 - eps3,
/// node 3 = eps3 - eps4, node 4 = eps3 + eps4. The affine node uses the
/// highest root theta = eps1 + eps2: `e0 = z E_{-theta}`, `f0 = z^-1 E_theta`.
pub fn build_chevalley<S: Scalar>() -> Result<ChevalleyBasis<S>> {
    let finite = [
        Root::Minus(0, 1),
        Root::Minus(1, 2),
        Root::Minus(2, 3),
        Root::Plus(2, 3),
    ];
    let theta = root_vector::<S>(Root::Plus(0, 1), 0);
    let mut e: Vec<Element<S>> = vec![transpose_shift(&theta, 1)];
    let mut f: Vec<Element<S>> = vec![Element::from_cells(
        theta.cells().map(|(&(m, a, b), v)| ((m - 1, a, b), v.clone())),
    )];
    for root in finite {
        let x = root_vector::<S>(root, 0);
        f.push(transpose_shift(&x, 0));
        e.push(x);
    }

    // c from (e_1|f_1) = 1: trace of e_1 f_1 must be 1/c.
    if trace_product(&e[1], &f[1]) * trace_scale::<S>() != S::one() {
        return Err(Error::Defect("trace normalization does not give (e1|f1) = 1".into()));
    }

    let coroot: Vec<Element<S>> = (0..5).map(|i| e[i].bracket(&f[i])).collect();
    let k = Element::central_unit();
    let basis = ChevalleyBasis {
        e: e.try_into().expect("five generators"),
        f: f.try_into().expect("five generators"),
        coroot: coroot.try_into().expect("five coroots"),
        d: Element::derivation_unit(),
        k,
    };
    if let Some(failed) = fundamental_relations(&basis).into_iter().find(|c| !c.passed) {
        return Err(Error::Defect(format!("relation `{}` fails (residual {:e})", failed.name, failed.residual)));
    }
    Ok(basis)
}

/// Outcome of one identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest absolute coefficient of the residual.
    pub residual: f64,
}

impl Check {
    pub fn element<S: Scalar>(name: impl Into<String>, residual: &Element<S>) -> Self {
        Self {
            name: name.into(),
            passed: residual.is_zero(),
            residual: residual.max_abs(),
        }
    }

    pub fn scalar<S: Scalar>(name: impl Into<String>, residual: &S) -> Self {
        Self {
            name: name.into(),
            passed: residual.is_zero(),
            residual: residual.to_f64().abs(),
        }
    }
}

/// `(ad x)^n (y)`.
pub fn ad_power<S: Scalar>(x: &Element<S>, n: usize, y: &Element<S>) -> Element<S> {
    (0..n).fold(y.clone(), |acc, _| x.bracket(&acc))
}

/// Every defining relation: Cartan relations, `[e_i, f_j]`, Serre
/// relations, the action of `d`, and centrality of `K`.
pub fn fundamental_relations<S: Scalar>(b: &ChevalleyBasis<S>) -> Vec<Check> {
    let mut out = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            let a = S::from_i64(CARTAN[i][j]);
            out.push(Check::element(
                format!("[h{i},h{j}] = 0"),
                &b.coroot[i].bracket(&b.coroot[j]),
            ));
            out.push(Check::element(
                format!("[h{i},e{j}] = a{i}{j} e{j}"),
                &(b.coroot[i].bracket(&b.e[j]) - b.e[j].scale(&a)),
            ));
            out.push(Check::element(
                format!("[h{i},f{j}] = -a{i}{j} f{j}"),
                &(b.coroot[i].bracket(&b.f[j]) + b.f[j].scale(&a)),
            ));
            let expected = if i == j { b.coroot[i].clone() } else { Element::zero() };
            out.push(Check::element(
                format!("[e{i},f{j}] = delta h{i}"),
                &(b.e[i].bracket(&b.f[j]) - expected),
            ));
            if i != j {
                let n = (1 - CARTAN[i][j]) as usize;
                out.push(Check::element(
                    format!("(ad e{i})^{n} e{j} = 0"),
                    &ad_power(&b.e[i], n, &b.e[j]),
                ));
                out.push(Check::element(
                    format!("(ad f{i})^{n} f{j} = 0"),
                    &ad_power(&b.f[i], n, &b.f[j]),
                ));
            }
        }
        let delta = if i == 0 { S::one() } else { S::zero() };
        out.push(Check::element(format!("[d,h{i}] = 0"), &b.d.bracket(&b.coroot[i])));
        out.push(Check::element(
            format!("[d,e{i}] = delta e0"),
            &(b.d.bracket(&b.e[i]) - b.e[i].scale(&delta)),
        ));
        out.push(Check::element(
            format!("[d,f{i}] = -delta f0"),
            &(b.d.bracket(&b.f[i]) + b.f[i].scale(&delta)),
        ));
    }
    let marks = MARKS.map(S::from_i64);
    out.push(Check::element(
        "K = h0 + h1 + 2h2 + h3 + h4",
        &(b.coroot_combination(&marks) - b.k.clone()),
    ));
    for (n, x) in b.generators().iter().enumerate() {
        out.push(Check::element(format!("[K, generator {n}] = 0"), &b.k.bracket(x)));
    }
    out
}

/// The table of invariant-form values on generators.
pub fn form_table<S: Scalar>(b: &ChevalleyBasis<S>) -> Vec<Check> {
    let mut out = Vec::new();
    let delta = |i: usize, j: usize| if i == j { S::one() } else { S::zero() };
    for i in 0..5 {
        for j in 0..5 {
            out.push(Check::scalar(
                format!("(h{i}|h{j}) = a{i}{j}"),
                &(b.coroot[i].form(&b.coroot[j]) - S::from_i64(CARTAN[i][j])),
            ));
            out.push(Check::scalar(
                format!("(e{i}|f{j}) = delta"),
                &(b.e[i].form(&b.f[j]) - delta(i, j)),
            ));
            out.push(Check::scalar(format!("(h{i}|e{j}) = 0"), &b.coroot[i].form(&b.e[j])));
            out.push(Check::scalar(format!("(h{i}|f{j}) = 0"), &b.coroot[i].form(&b.f[j])));
        }
        out.push(Check::scalar(
            format!("(d|h{i}) = delta0"),
            &(b.d.form(&b.coroot[i]) - delta(0, i)),
        ));
        out.push(Check::scalar(format!("(d|e{i}) = 0"), &b.d.form(&b.e[i])));
        out.push(Check::scalar(format!("(d|f{i}) = 0"), &b.d.form(&b.f[i])));
    }
    out.push(Check::scalar("(d|d) = 0", &b.d.form(&b.d)));
    out
}

/// Degrees of `e_0..e_4` for the gradation of type s = (1,1,0,1,1).
pub const S_TYPE: [i32; 5] = [1, 1, 0, 1, 1];

/// The Z-gradation of type s = (1,1,0,1,1), defined by `d_s`.
#[derive(Clone, Debug)]
pub struct Gradation<S> {
    pub d_s: Element<S>,
    z_weight: i64,
    diag: [i64; DIM],
}

impl<S: Scalar> Gradation<S> {
    /// `d_s = 4d + 2h1 + 3h2 + 2h3 + 2h4`.
    pub fn new(b: &ChevalleyBasis<S>) -> Result<Self> {
        let coeffs = [0, 2, 3, 2, 2].map(S::from_i64);
        let d_s = b.d.scale_i(4) + b.coroot_combination(&coeffs);
        let as_int = |v: &S| -> Result<i64> {
            let r = v.to_f64().round();
            if S::from_i64(r as i64) == *v {
                Ok(r as i64)
            } else {
                Err(Error::Defect(format!("d_s has non-integral weight {v:?}")))
            }
        };
        if d_s.cells().any(|(&(m, a, c), _)| m != 0 || a != c) {
            return Err(Error::Defect("d_s is not diagonal of z-degree 0".into()));
        }
        let mut diag = [0i64; DIM];
        for (slot, a) in diag.iter_mut().zip(0..DIM) {
            *slot = as_int(&d_s.cell(0, a, a))?;
        }
        let z_weight = as_int(d_s.derivation())?;
        let grad = Self { d_s, z_weight, diag };
        for i in 0..5 {
            let lhs = grad.d_s.bracket(&b.e[i]) - b.e[i].scale_i(S_TYPE[i] as i64);
            if !lhs.is_zero() {
                return Err(Error::Defect(format!("[d_s, e{i}] has the wrong degree")));
            }
        }
        Ok(grad)
    }

    /// d_s-eigenvalue of the cell `E_{row,col} z^m`.
    pub fn cell_degree(&self, m: i32, row: usize, col: usize) -> i32 {
        (self.z_weight * m as i64 + self.diag[row] - self.diag[col]) as i32
    }

    /// Splits `a` into d_s-eigencomponents.
    pub fn degree_s(&self, a: &Element<S>) -> BTreeMap<i32, Element<S>> {
        let mut out: BTreeMap<i32, Element<S>> = BTreeMap::new();
        for (&(m, r, c), v) in a.cells() {
            let k = self.cell_degree(m, r as usize, c as usize);
            out.entry(k)
                .or_default()
                .add_cell((m, r, c), v.clone());
        }
        if !a.central().is_zero() || !a.derivation().is_zero() {
            let zero = out.entry(0).or_default();
            zero.central = a.central().clone();
            zero.derivation = a.derivation().clone();
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// The component of `a` of d_s-degree `k`.
    pub fn component(&self, a: &Element<S>, k: i32) -> Element<S> {
        self.degree_s(a).remove(&k).unwrap_or_default()
    }

    /// A basis of `g_k(s)` restricted to `|z-degree| <= cap`: one element
    /// `E_ab - E_{b'a'}` per cell pair, plus `K` and `d` in degree zero.
    pub fn graded_basis(&self, k: i32, cap: i32) -> Vec<Element<S>> {
        let mut out = Vec::new();
        for m in -cap..=cap {
            for a in 0..DIM {
                for b in 0..DIM {
                    if a == partner(b) || self.cell_degree(m, a, b) != k {
                        continue;
                    }
                    let mirror = (partner(b), partner(a));
                    if (a, b) > mirror {
                        continue;
                    }
                    out.push(Element::from_cells([
                        ((m, a as u8, b as u8), S::one()),
                        ((m, mirror.0 as u8, mirror.1 as u8), -S::one()),
                    ]));
                }
            }
        }
        if k == 0 {
            out.push(Element::central_unit());
            out.push(Element::derivation_unit());
        }
        out
    }
}

/// `sum_k s^k / k! (ad x)^k (a)`, i.e. `exp(s x) a exp(-s x)` for nilpotent
/// `ad x`.
pub fn ad_exp_conjugate<S: Scalar>(x: &Element<S>, s: &S, a: &Element<S>) -> Result<Element<S>> {
    ad_exp_conjugate_capped(x, s, a, DEFAULT_SERIES_CAP)
}

pub fn ad_exp_conjugate_capped<S: Scalar>(x: &Element<S>, s: &S, a: &Element<S>, cap: usize) -> Result<Element<S>> {
    let mut sum = a.clone();
    let mut term = a.clone();
    // Inexact scalars: stop once a term is below rounding level of the sum.
    let floor = if S::EXACT { 0.0 } else { 1e-15 * (1.0 + a.max_abs()) };
    for k in 1..=cap {
        term = x.bracket(&term).scale(&(s.clone() / S::from_i64(k as i64)));
        if term.is_zero() || term.max_abs() <= floor {
            return Ok(sum);
        }
        sum = sum + term.clone();
    }
    Err(Error::NonNilpotent { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn basis() -> ChevalleyBasis<Rational> {
        build_chevalley().unwrap()
    }

    #[test]
    fn chevalley_relations_hold() {
        let b = basis();
        assert_eq!(b.e[2].bracket(&b.f[2]), b.coroot[2]);
        assert!(ad_power(&b.e[0], 2, &b.e[2]).is_zero());
        assert_eq!(b.coroot[0].bracket(&b.e[2]), -b.e[2].clone());
        for x in b.generators() {
            assert!(b.k.bracket(&x).is_zero());
        }
    }

    #[test]
    fn affine_coroot_is_k_minus_theta() {
        let b = basis();
        let h0 = &b.coroot[0];
        assert_eq!(h0.central(), &q(1, 1));
        assert!(h0.cells().all(|(&(m, r, c), _)| m == 0 && r == c));
    }

    #[test]
    fn bracket_with_d() {
        let b = basis();
        assert_eq!(b.d.bracket(&b.e[0]), b.e[0]);
        assert!(b.d.bracket(&b.e[3]).is_zero());
    }

    #[test]
    fn form_examples() {
        let b = basis();
        assert_eq!(b.coroot[0].form(&b.coroot[2]), q(-1, 1));
        assert_eq!(b.d.form(&b.coroot[0]), q(1, 1));
        assert_eq!(b.d.form(&b.coroot[1]), q(0, 1));
        assert_eq!(b.d.form(&b.d), q(0, 1));
        assert!(form_table(&b).iter().all(|c| c.passed));
    }

    #[test]
    fn gradation_degrees() {
        let b = basis();
        let g = Gradation::new(&b).unwrap();
        let one = |x: &Element<Rational>, k: i32| {
            let parts = g.degree_s(x);
            assert_eq!(parts.len(), 1);
            assert_eq!(parts.get(&k), Some(x));
        };
        one(&b.e[2], 0);
        one(&b.e[0], 1);
        one(&b.f[3], -1);
        let split = g.degree_s(&(b.e[0].clone() + b.f[3].clone()));
        assert_eq!(split[&1], b.e[0]);
        assert_eq!(split[&-1], b.f[3]);
        assert_eq!(g.d_s.form(&b.coroot[2]), q(0, 1));
        for j in [0, 1, 3, 4] {
            assert_eq!(g.d_s.form(&b.coroot[j]), q(1, 1));
        }
    }

    #[test]
    fn graded_components_lie_in_so8_and_are_eigenvectors() {
        let b = basis();
        let g = Gradation::new(&b).unwrap();
        for k in -3..=3 {
            for x in g.graded_basis(k, 2) {
                assert!(x.in_so8());
                assert_eq!(g.d_s.bracket(&x), x.scale_i(k as i64));
            }
        }
        // so(8) has 28 dimensions per z-degree; with |m| <= 2 the degrees
        // partition 5 * 28 loop vectors (plus K and d).
        let total: usize = (-12..=12).map(|k| g.graded_basis(k, 2).len()).sum();
        assert_eq!(total, 5 * 28 + 2);
    }

    #[test]
    fn ad_exp_examples() {
        let b = basis();
        let s = q(3, 7);
        let lhs = ad_exp_conjugate(&b.f[2], &s, &b.coroot[2]).unwrap();
        assert_eq!(lhs, b.coroot[2].clone() + b.f[2].scale(&(s * q(2, 1))));
        let a = b.e[0].clone() + b.coroot[3].clone();
        assert_eq!(ad_exp_conjugate(&b.f[2], &q(0, 1), &a).unwrap(), a);
        let lhs = ad_exp_conjugate(&b.f[2], &q(1, 1), &b.e[2]).unwrap();
        assert_eq!(lhs, b.e[2].clone() - b.coroot[2].clone() - b.f[2].clone());
    }

    #[test]
    fn non_nilpotent_series_is_rejected() {
        let b = basis();
        let err = ad_exp_conjugate(&b.coroot[2], &q(1, 1), &b.e[2]).unwrap_err();
        assert_eq!(err, Error::NonNilpotent { cap: DEFAULT_SERIES_CAP });
    }

    #[test]
    fn degree_cap_is_enforced() {
        let x: Element<Rational> = Element::from_cells([((9, 0, 1), q(1, 1)), ((9, 6, 7), q(-1, 1))]);
        assert_eq!(x.check_degree_cap(DEFAULT_DEGREE_CAP), Err(Error::DegreeCap { degree: 9, cap: 8 }));
    }

    #[test]
    fn dump_format() {
        let b = basis();
        let text = b.coroot[0].dump();
        assert!(text.lines().any(|l| l == "cell 0 0 0 -1/1"));
        assert!(text.ends_with("K 1/1\nd 0/1\n"));
        assert_eq!(Element::parse_dump(&text).unwrap(), b.coroot[0]);
    }
}
