//! Coordinates of the similarity-reduced hierarchy.
//!
//! The two degree-zero operators are
//! `U_i = sum_j u_{j,i} h_j + x_i e2 + y_i f2` (`i = 1, 2`), and the reduced
//! operator `M = t1 B_{1,1} + t2 B_{1,2}` has degree-zero part
//! `sum_{j != 2} kappa_j h_j + eta h2 + phi e2 + psi f2`.
//!
//! Three families of constraints tie them together: six linear equations
//! equivalent to `[Lambda_{1,1}, U_2] = [Lambda_{1,2}, U_1]`, two quadratic
//! normalization equations, and the seven linear definitions of
//! `(kappa, eta, phi, psi)`. [`solve_coefficients`] inverts them pointwise.

use crate::algebra::{ChevalleyBasis, Element};
use crate::error::{Error, Result};
use crate::heisenberg::lambda_plus_one;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// The non-central nodes, in storage order for `kappa` and `alpha`.
pub const NODES: [usize; 4] = [0, 1, 3, 4];

/// Number of scalar unknowns in [`ReductionCoefficients`].
pub const UNKNOWNS: usize = 14;

/// `u_{j,i}`, `x_i`, `y_i`; the time index `i` is stored 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionCoefficients<S> {
    pub u: [[S; 2]; 5],
    pub x: [S; 2],
    pub y: [S; 2],
}

impl<S: Scalar> ReductionCoefficients<S> {
    pub fn zero() -> Self {
        Self::from_vec(&vec![S::zero(); UNKNOWNS])
    }

    /// `u_{j,i}` with `i` in {1, 2}.
    pub fn u(&self, j: usize, i: usize) -> S {
        self.u[j][i - 1].clone()
    }

    /// Flattens as `u_{0,1}, u_{0,2}, u_{1,1}, ..., u_{4,2}, x_1, x_2, y_1, y_2`.
    pub fn to_vec(&self) -> Vec<S> {
        self.u
            .iter()
            .flat_map(|r| r.iter().cloned())
            .chain(self.x.iter().cloned())
            .chain(self.y.iter().cloned())
            .collect()
    }

    pub fn from_vec(v: &[S]) -> Self {
        assert_eq!(v.len(), UNKNOWNS);
        let u = std::array::from_fn(|j| [v[2 * j].clone(), v[2 * j + 1].clone()]);
        Self {
            u,
            x: [v[10].clone(), v[11].clone()],
            y: [v[12].clone(), v[13].clone()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::scalar::max_abs(&self.to_vec())
    }

    /// `U_i = sum_j u_{j,i} h_j + x_i e2 + y_i f2`.
    pub fn operator(&self, i: usize, b: &ChevalleyBasis<S>) -> Element<S> {
        let coeffs = std::array::from_fn(|j| self.u(j, i));
        b.coroot_combination(&coeffs) + b.e[2].scale(&self.x[i - 1]) + b.f[2].scale(&self.y[i - 1])
    }
}

/// Degree-zero data of the reduced operator `M` together with the times.
#[derive(Clone, Debug, PartialEq)]
pub struct MCoefficients<S> {
    /// `kappa_j` for `j` in [`NODES`] order.
    pub kappa: [S; 4],
    pub eta: S,
    pub phi: S,
    pub psi: S,
    pub t1: S,
    pub t2: S,
}

impl<S: Scalar> MCoefficients<S> {
    pub fn zero(t1: S, t2: S) -> Self {
        Self {
            kappa: std::array::from_fn(|_| S::zero()),
            eta: S::zero(),
            phi: S::zero(),
            psi: S::zero(),
            t1,
            t2,
        }
    }

    fn kappa_sum(&self) -> S {
        self.kappa.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    fn kappa_sq_sum(&self) -> S {
        self.kappa.iter().fold(S::zero(), |a, b| a + b.clone() * b.clone())
    }
}

/// The six linear equations, term by term.
pub fn residual_linear<S: Scalar>(rc: &ReductionCoefficients<S>) -> [S; 6] {
    let u = |j, i| rc.u(j, i);
    let two = S::from_i64(2);
    let [x1, x2] = rc.x.clone();
    let [y1, y2] = rc.y.clone();
    [
        u(1, 1) - two.clone() * u(2, 1) + u(3, 1) + two.clone() * u(4, 1) - u(1, 2) + u(3, 2),
        u(1, 1) - u(3, 1) - two.clone() * u(0, 2) - u(1, 2) + two.clone() * u(2, 2) - u(3, 2),
        u(1, 1) - u(3, 1) + u(1, 2) + u(3, 2) - two.clone() * u(4, 2) + two.clone() * x1,
        two.clone() * u(0, 1) - u(1, 1) - u(3, 1) - u(1, 2) + u(3, 2) + two.clone() * x2,
        u(1, 1) - u(3, 1) + two.clone() * u(0, 2) - u(1, 2) - u(3, 2) + two.clone() * y1,
        u(1, 1) + u(3, 1) - two.clone() * u(4, 1) - u(1, 2) + u(3, 2) + two * y2,
    ]
}

/// `[Lambda_{1,1}, U_2] - [Lambda_{1,2}, U_1]`.
pub fn residual_bracket<S: Scalar>(rc: &ReductionCoefficients<S>, b: &ChevalleyBasis<S>) -> Element<S> {
    let [l1, l2] = lambda_plus_one(b).basis;
    l1.bracket(&rc.operator(2, b)) - l2.bracket(&rc.operator(1, b))
}

/// Sign in front of `(U_i|U_j) / 2` in the normalization constraint
/// `(d_s|d_{1,i} U_j) +- (U_i|U_j)/2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum NormSign {
    /// `+`: yields the quadratic relation for `eta`; the coordinate form
    /// of the constraint uses this sign.
    Plus,
    /// `-`.
    Minus,
}

/// The two normalization equations in coordinates (sign `+`).
pub fn residual_norm<S: Scalar>(rc: &ReductionCoefficients<S>, m: &MCoefficients<S>) -> [S; 2] {
    residual_norm_signed(rc, m, NormSign::Plus)
}

/// Normalization residuals for either sign choice.
pub fn residual_norm_signed<S: Scalar>(
    rc: &ReductionCoefficients<S>,
    m: &MCoefficients<S>,
    sign: NormSign,
) -> [S; 2] {
    let two = S::from_i64(2);
    let four = S::from_i64(4);
    let shifted = |l: usize, i: usize| two.clone() * rc.u(l, i) - rc.u(2, i);
    let pair = |i: usize, j: usize| -> S {
        let quad = NODES
            .iter()
            .fold(S::zero(), |acc, &l| acc + shifted(l, i) * shifted(l, j));
        let xy = two.clone()
            * (rc.x[i - 1].clone() * rc.y[j - 1].clone() + rc.y[i - 1].clone() * rc.x[j - 1].clone());
        quad + xy
    };
    let residual = |i: usize| -> S {
        let linear = NODES.iter().fold(S::zero(), |acc, &l| acc + four.clone() * rc.u(l, i));
        let quadratic = m.t1.clone() * pair(i, 1) + m.t2.clone() * pair(i, 2);
        match sign {
            NormSign::Plus => linear - quadratic,
            NormSign::Minus => linear + quadratic,
        }
    };
    [residual(1), residual(2)]
}

/// `kappa_j = t1 u_{j,1} + t2 u_{j,2}`, `eta`, `phi`, `psi` likewise.
pub fn m_from_rc<S: Scalar>(rc: &ReductionCoefficients<S>, t1: S, t2: S) -> MCoefficients<S> {
    let comb = |a: S, b: S| t1.clone() * a + t2.clone() * b;
    MCoefficients {
        kappa: NODES.map(|j| comb(rc.u(j, 1), rc.u(j, 2))),
        eta: comb(rc.u(2, 1), rc.u(2, 2)),
        phi: comb(rc.x[0].clone(), rc.x[1].clone()),
        psi: comb(rc.y[0].clone(), rc.y[1].clone()),
        t1,
        t2,
    }
}

/// `eta^2 - (k0+k1+k3+k4)(eta+1) + k0^2+k1^2+k3^2+k4^2 + phi psi`.
pub fn eta_quadratic_residual<S: Scalar>(m: &MCoefficients<S>) -> S {
    m.eta.clone() * m.eta.clone() - m.kappa_sum() * (m.eta.clone() + S::one()) + m.kappa_sq_sum()
        + m.phi.clone() * m.psi.clone()
}

/// Matrix of a linear map on the 14 unknowns, built by evaluating it on unit
/// vectors.
fn matrix_of<S: Scalar>(rows: usize, f: impl Fn(&ReductionCoefficients<S>) -> Vec<S>) -> Matrix<S> {
    let mut m = Matrix::zeros(rows, UNKNOWNS);
    for c in 0..UNKNOWNS {
        let mut v = vec![S::zero(); UNKNOWNS];
        v[c] = S::one();
        for (r, val) in f(&ReductionCoefficients::from_vec(&v)).into_iter().enumerate() {
            m[(r, c)] = val;
        }
    }
    m
}

/// The 6 x 14 coefficient matrix of [`residual_linear`].
pub fn linear_constraint_matrix<S: Scalar>() -> Matrix<S> {
    matrix_of(6, |rc| residual_linear(rc).to_vec())
}

/// Coefficient matrix of [`residual_bracket`]: one row per loop cell plus
/// one for `K`.
pub fn bracket_constraint_matrix<S: Scalar>(b: &ChevalleyBasis<S>) -> Matrix<S> {
    let images: Vec<Element<S>> = (0..UNKNOWNS)
        .map(|c| {
            let mut v = vec![S::zero(); UNKNOWNS];
            v[c] = S::one();
            residual_bracket(&ReductionCoefficients::from_vec(&v), b)
        })
        .collect();
    let mut keys: Vec<_> = images.iter().flat_map(|e| e.cells().map(|(k, _)| *k)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut m = Matrix::zeros(keys.len() + 1, UNKNOWNS);
    for (c, img) in images.iter().enumerate() {
        for (r, &(d, row, col)) in keys.iter().enumerate() {
            m[(r, c)] = img.cell(d, row as usize, col as usize);
        }
        m[(keys.len(), c)] = img.central().clone();
    }
    m
}

/// Options for [`solve_coefficients`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Residual tolerance (relative to the size of the solution) for inexact
    /// scalars.
    pub tol: f64,
    /// Reject inputs violating the quadratic relation for `eta` up front.
    pub strict: bool,
    pub sign: NormSign,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            strict: false,
            sign: NormSign::Plus,
        }
    }
}

/// Recovers `u_{j,i}`, `x_i`, `y_i` from the reduced data `m`.
///
/// The six linear constraints and the seven definitions of `m` leave a
/// one-parameter family (the `K` direction with `t1 c1 + t2 c2 = 0`). Along
/// it both normalization residuals are polynomials of degree at most two in
/// the parameter; they are interpolated from three samples and the common
/// root is selected.
///
/// The linear part has full rank unless `t1 = t2 = 0` or
/// `(t1^2 - 2 t1 t2 - t2^2)(t1^2 + 2 t1 t2 - t2^2) = 0`; with `t2 = 1` these
/// are `t1 = +-1 +- sqrt 2`, the zeros of `Theta_0`. There the call returns
/// [`Error::SingularTimes`].
pub fn solve_coefficients<S: Scalar>(m: &MCoefficients<S>) -> Result<ReductionCoefficients<S>> {
    solve_coefficients_with(m, SolveOptions::default())
}

pub fn solve_coefficients_with<S: Scalar>(
    m: &MCoefficients<S>,
    opts: SolveOptions,
) -> Result<ReductionCoefficients<S>> {
    let singular = || Error::SingularTimes {
        t1: m.t1.to_f64(),
        t2: m.t2.to_f64(),
    };
    let data_scale = 1.0
        + crate::scalar::max_abs(
            m.kappa
                .iter()
                .chain([&m.eta, &m.phi, &m.psi]),
        );
    if opts.strict {
        let r = eta_quadratic_residual(m);
        if !r.is_negligible(opts.tol * data_scale * data_scale) {
            return Err(Error::Inconsistent { residual: r.to_f64() });
        }
    }

    let (t1, t2) = (m.t1.clone(), m.t2.clone());
    let a = matrix_of::<S>(13, |rc| {
        let mut rows = residual_linear(rc).to_vec();
        let mm = m_from_rc(rc, t1.clone(), t2.clone());
        rows.extend(mm.kappa);
        rows.extend([mm.eta, mm.phi, mm.psi]);
        rows
    });
    let mut rhs: Vec<S> = vec![S::zero(); 6];
    rhs.extend(m.kappa.iter().cloned());
    rhs.extend([m.eta.clone(), m.phi.clone(), m.psi.clone()]);
    if a.rank() != 13 {
        return Err(singular());
    }
    let (particular, null) = a.solve_affine(&rhs).ok_or_else(singular)?;
    let direction = null.into_iter().next().ok_or_else(singular)?;

    let at = |s: &S| -> Vec<S> {
        particular
            .iter()
            .zip(&direction)
            .map(|(p, d)| p.clone() + s.clone() * d.clone())
            .collect()
    };
    let norm_at = |s: &S| residual_norm_signed(&ReductionCoefficients::from_vec(&at(s)), m, opts.sign);

    // Quadratic interpolation through s = -1, 0, 1.
    let (rm, r0, rp) = (norm_at(&-S::one()), norm_at(&S::zero()), norm_at(&S::one()));
    let half = S::ratio(1, 2);
    let coeffs: Vec<(S, S, S)> = (0..2)
        .map(|i| {
            let quad = (rp[i].clone() + rm[i].clone()) * half.clone() - r0[i].clone();
            let lin = (rp[i].clone() - rm[i].clone()) * half.clone();
            (quad, lin, r0[i].clone())
        })
        .collect();

    let lin_scale = coeffs.iter().map(|c| c.1.to_f64().abs()).fold(0.0, f64::max);
    let quad_negligible = coeffs
        .iter()
        .all(|c| c.0.is_negligible(1e-12 * (1.0 + lin_scale)));
    let candidates: Vec<S> = if quad_negligible {
        let best = coeffs
            .iter()
            .max_by(|a, b| a.1.to_f64().abs().total_cmp(&b.1.to_f64().abs()))
            .expect("two residuals");
        if best.1.is_negligible(0.0) {
            vec![S::zero()]
        } else {
            vec![-best.2.clone() / best.1.clone()]
        }
    } else if S::EXACT {
        return Err(Error::Defect("normalization residual is not affine along the free direction".into()));
    } else {
        let (qa, qb, qc) = coeffs
            .iter()
            .max_by(|a, b| a.0.to_f64().abs().total_cmp(&b.0.to_f64().abs()))
            .map(|c| (c.0.to_f64(), c.1.to_f64(), c.2.to_f64()))
            .expect("two residuals");
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::Inconsistent { residual: disc });
        }
        let sq = disc.sqrt();
        vec![
            S::from_f64((-qb + sq) / (2.0 * qa)),
            S::from_f64((-qb - sq) / (2.0 * qa)),
        ]
    };

    let mut best: Option<(f64, Vec<S>)> = None;
    for s in candidates {
        let v = at(&s);
        let r = norm_at(&s);
        let err = crate::scalar::max_abs(&r);
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, v));
        }
    }
    let (err, v) = best.expect("at least one candidate");
    let rc = ReductionCoefficients::from_vec(&v);
    let scale = 1.0 + rc.max_abs();
    let tol = opts.tol * scale * scale * (1.0 + m.t1.to_f64().abs() + m.t2.to_f64().abs());
    let residuals = residual_norm_signed(&rc, m, opts.sign);
    if residuals.iter().any(|r| !r.is_negligible(tol)) {
        return Err(Error::Inconsistent { residual: err });
    }
    Ok(rc)
}

/// `kappa_j = -(8 alpha_j - (a0^2 + a1^2 + a3^2 + a4^2) - 4) / 16`.
pub fn kappa_from_alpha<S: Scalar>(alpha: &[S; 4]) -> [S; 4] {
    let sq = alpha.iter().fold(S::zero(), |a, x| a + x.clone() * x.clone());
    alpha.clone().map(|a| -(S::from_i64(8) * a - sq.clone() - S::from_i64(4)) / S::from_i64(16))
}

/// Both real preimages of [`kappa_from_alpha`].
///
/// With `B = sum alpha^2 + 4` and `c_j = 16 kappa_j`, every preimage has
/// `alpha_j = (B - c_j) / 8`, where `B` solves
/// `4 B^2 - (2 sum c + 64) B + sum c^2 + 256 = 0`. The map is two-to-one
/// away from the discriminant locus, so both branches are returned, smaller
/// `B` first.
pub fn alpha_from_kappa(kappa: &[f64; 4]) -> Result<[[f64; 4]; 2]> {
    let c = kappa.map(|k| 16.0 * k);
    let sum: f64 = c.iter().sum();
    let sq: f64 = c.iter().map(|x| x * x).sum();
    let (qa, qb, qc) = (4.0, -(2.0 * sum + 64.0), sq + 256.0);
    let disc = qb * qb - 4.0 * qa * qc;
    let scale = qb * qb + 4.0 * qa * qc.abs();
    let disc = if disc < 0.0 && disc > -1e-12 * scale { 0.0 } else { disc };
    if disc < 0.0 {
        return Err(Error::NoRealPreimage { discriminant: disc });
    }
    let sq_disc = disc.sqrt();
    // Stable quadratic roots.
    let big = -(qb - sq_disc) / 2.0;
    let (r1, r2) = if big == 0.0 { (0.0, 0.0) } else { (big / qa, qc / big) };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let branch = |b: f64| c.map(|cj| (b - cj) / 8.0);
    let out = [branch(lo), branch(hi)];
    for a in &out {
        let back = kappa_from_alpha(a);
        let err = back.iter().zip(kappa).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if !(err <= 1e-9 * (1.0 + kappa.iter().map(|k| k.abs()).fold(0.0, f64::max))) {
            return Err(Error::NoRealPreimage { discriminant: disc });
        }
    }
    Ok(out)
}

fn alpha_square_sum<S: Scalar>(alpha: &[S; 4]) -> S {
    alpha.iter().fold(S::zero(), |a, x| a + x.clone() * x.clone())
}

/// `lambda = -(8 eta - sum alpha^2 + 4) / (8 phi)` and `mu = phi`.
pub fn lambda_mu_from_m<S: Scalar>(m: &MCoefficients<S>, alpha: &[S; 4]) -> Result<(S, S)> {
    if m.phi.is_negligible(0.0) {
        return Err(Error::PhiZero);
    }
    let eight = S::from_i64(8);
    let lambda = -(eight.clone() * m.eta.clone() - alpha_square_sum(alpha) + S::from_i64(4)) / (eight * m.phi.clone());
    Ok((lambda, m.phi.clone()))
}

/// Inverse dictionary: `eta = -lambda mu + (sum alpha^2 - 4)/8`, `phi = mu`,
/// `kappa` from `alpha`, and `psi` from the quadratic relation.
pub fn m_from_lambda_mu<S: Scalar>(lambda: &S, mu: &S, alpha: &[S; 4], t1: S, t2: S) -> Result<MCoefficients<S>> {
    if mu.is_negligible(0.0) {
        return Err(Error::PhiZero);
    }
    let eta = -(lambda.clone() * mu.clone()) + (alpha_square_sum(alpha) - S::from_i64(4)) / S::from_i64(8);
    let mut m = MCoefficients {
        kappa: kappa_from_alpha(alpha),
        eta,
        phi: mu.clone(),
        psi: S::zero(),
        t1,
        t2,
    };
    // eta_quadratic_residual is affine in psi with slope phi.
    m.psi = -eta_quadratic_residual(&m) / m.phi.clone();
    Ok(m)
}

/// Residuals of the defining equations of `lambda`:
/// `phi lambda^2 + (2 eta - sum kappa) lambda - psi` and, for each `i` whose
/// derivative is supplied,
/// `d_{1,i} lambda + x_i lambda^2 - (u_{0,i}+u_{1,i}-2u_{2,i}+u_{3,i}+u_{4,i}) lambda - y_i`.
pub fn lambda_def_residual<S: Scalar>(
    rc: &ReductionCoefficients<S>,
    m: &MCoefficients<S>,
    lambda: &S,
    dlambda: [Option<S>; 2],
) -> [Option<S>; 3] {
    let l2 = lambda.clone() * lambda.clone();
    let quad = m.phi.clone() * l2.clone() + (S::from_i64(2) * m.eta.clone() - m.kappa_sum()) * lambda.clone()
        - m.psi.clone();
    let flow = |i: usize, d: &S| -> S {
        let coeff = rc.u(0, i) + rc.u(1, i) - S::from_i64(2) * rc.u(2, i) + rc.u(3, i) + rc.u(4, i);
        d.clone() + rc.x[i - 1].clone() * l2.clone() - coeff * lambda.clone() - rc.y[i - 1].clone()
    };
    [
        Some(quad),
        dlambda[0].as_ref().map(|d| flow(1, d)),
        dlambda[1].as_ref().map(|d| flow(2, d)),
    ]
}
