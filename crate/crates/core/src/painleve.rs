//! The sixth Painlevé equation in symmetric form.
//!
//! With `t_{1,2} = 1` and `t = t_{1,1}` the unknowns are `lambda`, `mu` and
//! `F_j = lambda - t_j` for `j = 0, 1, 3, 4`, `F_2 = mu`, where
//! `t_0 = -t`, `t_1 = -(t+1)/(t-1)`, `t_3 = (t-1)/(t+1)`, `t_4 = 1/t`.
//! Evaluators are generic over [`Scalar`] so that identities can be checked
//! in exact arithmetic; integration is `f64` only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, Solution, Termination};
use crate::poly::Poly2;
use crate::reduction::NODES;
use crate::scalar::Scalar;

/// Relative tolerance for agreement of the four `dlambda/dt` extractions.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Constraint fixing `alpha_2` from the other four parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `alpha_0 + alpha_1 + 2 alpha_2 + alpha_3 + alpha_4 = 4`.
    #[default]
    Intro4,
    /// `alpha_2 = -(alpha_0 + alpha_1 + alpha_3 + alpha_4 - 1) / 2`, i.e. the
    /// same sum equal to 1.
    Sec4,
}

impl Normalization {
    pub fn total(self) -> i64 {
        match self {
            Normalization::Intro4 => 4,
            Normalization::Sec4 => 1,
        }
    }

    pub fn alpha2<S: Scalar>(self, nodes: &[S; 4]) -> S {
        let sum = nodes.iter().cloned().fold(S::zero(), |a, b| a + b);
        (S::from_i64(self.total()) - sum) / S::from_i64(2)
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Intro4 => "intro4",
            Normalization::Sec4 => "sec4",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intro4" => Ok(Normalization::Intro4),
            "sec4" => Ok(Normalization::Sec4),
            other => Err(Error::InvalidWord(format!("unknown normalization `{other}`"))),
        }
    }
}

/// `(alpha_0, ..., alpha_4)` with `alpha_2` tied to the others.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PviParams<S = f64> {
    alpha: [S; 5],
    normalization: Normalization,
}

impl<S: Scalar> PviParams<S> {
    /// From `(alpha_0, alpha_1, alpha_3, alpha_4)`; `alpha_2` is derived.
    pub fn new(nodes: [S; 4], normalization: Normalization) -> Self {
        let a2 = normalization.alpha2(&nodes);
        let [a0, a1, a3, a4] = nodes;
        Self {
            alpha: [a0, a1, a2, a3, a4],
            normalization,
        }
    }

    /// Accepts all five values, rejecting any off the constraint surface.
    pub fn from_alphas(alpha: [S; 5], normalization: Normalization) -> Result<Self> {
        let p = Self { alpha, normalization };
        let sum = p.null_sum();
        let expected = S::from_i64(normalization.total());
        let scale = 1.0 + crate::scalar::max_abs(&p.alpha);
        if !(sum.clone() - expected).is_negligible(1e-12 * scale) {
            return Err(Error::Normalization {
                sum: sum.to_f64(),
                expected: normalization.total() as f64,
            });
        }
        Ok(p)
    }

    pub fn alpha(&self) -> &[S; 5] {
        &self.alpha
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `(alpha_0, alpha_1, alpha_3, alpha_4)`.
    pub fn nodes(&self) -> [S; 4] {
        NODES.map(|j| self.alpha[j].clone())
    }

    /// `alpha_0 + alpha_1 + 2 alpha_2 + alpha_3 + alpha_4`.
    pub fn null_sum(&self) -> S {
        crate::algebra::MARKS
            .iter()
            .zip(&self.alpha)
            .fold(S::zero(), |acc, (&m, a)| acc + S::from_i64(m) * a.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PviState<S = f64> {
    pub t: S,
    pub lambda: S,
    pub mu: S,
}

impl<S: Scalar> PviState<S> {
    pub fn new(t: S, lambda: S, mu: S) -> Self {
        Self { t, lambda, mu }
    }
}

/// `F_0..F_4` and `Theta_j` (indexed by node, `theta[2]` unused and zero).
#[derive(Clone, Debug, PartialEq)]
pub struct FCoords<S = f64> {
    pub f: [S; 5],
    pub theta: [S; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardState<S = f64> {
    pub s: S,
    pub q: S,
    pub p: S,
}

/// Points where the symmetric form is undefined: `t = 0, +-1` and the zeros
/// `t = 1 +- sqrt 2`, `t = -1 +- sqrt 2` of `Theta_0`.
pub fn singular_times() -> [f64; 7] {
    let r = std::f64::consts::SQRT_2;
    [-1.0 - r, -1.0, 1.0 - r, 0.0, r - 1.0, 1.0, 1.0 + r]
}

pub fn singular_distance(t: f64) -> f64 {
    singular_times().iter().map(|s| (t - s).abs()).fold(f64::INFINITY, f64::min)
}

fn singular<S: Scalar>(t: &S) -> Error {
    Error::SingularTime { t: t.to_f64() }
}

/// `t_j`, with `t_2 = 0` as a placeholder.
pub fn shifts<S: Scalar>(t: &S) -> Result<[S; 5]> {
    let one = S::one();
    if t.is_zero() || (t.clone() - one.clone()).is_zero() || (t.clone() + one.clone()).is_zero() {
        return Err(singular(t));
    }
    let (tp, tm) = (t.clone() + one.clone(), t.clone() - one.clone());
    Ok([
        -t.clone(),
        -(tp.clone() / tm.clone()),
        S::zero(),
        tm / tp,
        one / t.clone(),
    ])
}

/// `dt_j/dt`, with zero in slot 2.
pub fn shift_derivatives<S: Scalar>(t: &S) -> Result<[S; 5]> {
    shifts(t)?;
    let one = S::one();
    let two = S::from_i64(2);
    let sq = |v: S| v.clone() * v;
    Ok([
        -one.clone(),
        two.clone() / sq(t.clone() - one.clone()),
        S::zero(),
        two / sq(t.clone() + one.clone()),
        -(one / sq(t.clone())),
    ])
}

pub fn f_coords<S: Scalar>(st: &PviState<S>) -> Result<FCoords<S>> {
    let ts = shifts(&st.t)?;
    let f: [S; 5] = std::array::from_fn(|j| {
        if j == 2 {
            st.mu.clone()
        } else {
            st.lambda.clone() - ts[j].clone()
        }
    });
    let theta: [S; 5] = std::array::from_fn(|j| {
        if j == 2 {
            return S::zero();
        }
        NODES
            .iter()
            .filter(|&&i| i != j)
            .fold(S::one(), |acc, &i| acc * (f[j].clone() - f[i].clone()))
    });
    if theta[0].is_zero() {
        return Err(singular(&st.t));
    }
    Ok(FCoords { f, theta })
}

/// The right-hand sides `vartheta(F_j)` for `j = 0..4`.
pub fn theta_rhs<S: Scalar>(fc: &FCoords<S>, alpha: &[S; 5]) -> [S; 5] {
    let f = &fc.f;
    let a = |i: usize| alpha[i].clone();
    let one = S::one();
    let two = S::from_i64(2);
    let p = |idx: &[usize]| idx.iter().fold(S::one(), |acc, &i| acc * f[i].clone());

    let common = two.clone() * p(&[0, 1, 2, 3, 4])
        - (a(0) - one.clone()) * p(&[1, 3, 4])
        - (a(1) - one.clone()) * p(&[0, 3, 4])
        - (a(3) - one.clone()) * p(&[0, 1, 4])
        - (a(4) - one.clone()) * p(&[0, 1, 3]);

    let f2 = f[2].clone();
    let rhs2 = -(f2.clone() * f2.clone()) * (p(&[0, 1, 3]) + p(&[0, 1, 4]) + p(&[0, 3, 4]) + p(&[1, 3, 4]))
        + f2 * ((a(3) + a(4) - two.clone()) * p(&[0, 1])
            + (a(1) + a(4) - two.clone()) * p(&[0, 3])
            + (a(1) + a(3) - two.clone()) * p(&[0, 4])
            + (a(0) + a(4) - two.clone()) * p(&[1, 3])
            + (a(0) + a(3) - two.clone()) * p(&[1, 4])
            + (a(0) + a(1) - two) * p(&[3, 4]))
        - a(2) * alpha2_bracket(f, alpha);

    std::array::from_fn(|j| if j == 2 { rhs2.clone() } else { common.clone() + fc.theta[j].clone() })
}

/// `(a0+a2-1)F0 + (a1+a2-1)F1 + (a3+a2-1)F3 + (a4+a2-1)F4`.
pub(crate) fn alpha2_bracket<S: Scalar>(f: &[S; 5], alpha: &[S; 5]) -> S {
    NODES.iter().fold(S::zero(), |acc, &j| {
        acc + (alpha[j].clone() + alpha[2].clone() - S::one()) * f[j].clone()
    })
}

/// `dlambda/dt` from each `vartheta(F_j)`, `j` in [`NODES`] order.
pub fn lambda_rates<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>) -> Result<[S; 4]> {
    let fc = f_coords(st)?;
    let rhs = theta_rhs(&fc, pr.alpha());
    let dts = shift_derivatives(&st.t)?;
    Ok(NODES.map(|j| rhs[j].clone() / fc.theta[0].clone() + dts[j].clone()))
}

/// `(dlambda/dt, dmu/dt)`, with the four `dlambda/dt` extractions required to
/// agree.
pub fn rhs_symmetric<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>) -> Result<[S; 2]> {
    rhs_symmetric_with(st, pr, true)
}

pub fn rhs_symmetric_with<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>, cross_check: bool) -> Result<[S; 2]> {
    let fc = f_coords(st)?;
    let rhs = theta_rhs(&fc, pr.alpha());
    let dts = shift_derivatives(&st.t)?;
    let theta0 = fc.theta[0].clone();
    let dlambda = rhs[0].clone() / theta0.clone() + dts[0].clone();
    if cross_check {
        let reference = dlambda.to_f64();
        let scale = 1.0
            + reference.abs()
            + NODES
                .iter()
                .map(|&j| (rhs[j].to_f64() / theta0.to_f64()).abs())
                .fold(0.0, f64::max);
        for &j in &NODES[1..] {
            let value = rhs[j].clone() / theta0.clone() + dts[j].clone();
            if !(value.clone() - dlambda.clone()).is_negligible(CROSS_CHECK_TOL * scale) {
                return Err(Error::ConsistencyFailure {
                    node: j,
                    value: value.to_f64(),
                    reference,
                });
            }
        }
    }
    Ok([dlambda, rhs[2].clone() / theta0])
}

/// `Theta_0 H'` as a polynomial in `(lambda, mu)` at fixed `t`.
pub fn hprime_poly<S: Scalar>(t: &S, pr: &PviParams<S>) -> Result<Poly2<S>> {
    let ts = shifts(t)?;
    let f: [Poly2<S>; 5] = std::array::from_fn(|j| {
        if j == 2 {
            Poly2::y()
        } else {
            Poly2::x() - Poly2::constant(ts[j].clone())
        }
    });
    let alpha = pr.alpha();
    let c = |v: S| Poly2::constant(v);
    let one = S::one();
    let p = |idx: &[usize]| idx.iter().map(|&i| f[i].clone()).product::<Poly2<S>>();
    let bracket = NODES
        .iter()
        .map(|&j| {
            let coeff = if j == 0 {
                alpha[0].clone() - one.clone()
            } else {
                alpha[j].clone() + alpha[2].clone() - one.clone()
            };
            c(coeff) * f[j].clone()
        })
        .sum::<Poly2<S>>();
    Ok(p(&[0, 1, 2, 2, 3, 4])
        - c(alpha[0].clone() - one.clone()) * p(&[1, 2, 3, 4])
        - c(alpha[1].clone() - one.clone()) * p(&[0, 2, 3, 4])
        - c(alpha[3].clone() - one.clone()) * p(&[0, 1, 2, 4])
        - c(alpha[4].clone() - one) * p(&[0, 1, 2, 3])
        + c(alpha[2].clone()) * f[0].clone() * bracket)
}

fn theta0<S: Scalar>(t: &S) -> Result<S> {
    let ts = shifts(t)?;
    let th = [1usize, 3, 4]
        .iter()
        .fold(S::one(), |acc, &i| acc * (ts[i].clone() - ts[0].clone()));
    if th.is_zero() {
        return Err(singular(t));
    }
    Ok(th)
}

pub fn hamiltonian_hprime<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>) -> Result<S> {
    Ok(hprime_poly(&st.t, pr)?.eval(&st.lambda, &st.mu) / theta0(&st.t)?)
}

/// `(dH'/dmu, -dH'/dlambda)` from the polynomial form.
pub fn rhs_hamiltonian<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>) -> Result<[S; 2]> {
    let h = hprime_poly(&st.t, pr)?;
    let th = theta0(&st.t)?;
    Ok([
        h.d_dy().eval(&st.lambda, &st.mu) / th.clone(),
        -(h.d_dx().eval(&st.lambda, &st.mu) / th),
    ])
}

fn map_error<S: Scalar>(t: &S) -> Error {
    Error::SingularMap { t: t.to_f64() }
}

/// `s(t) = -((t + t_3)(t_4 - t_1)) / ((t + t_1)(t_3 - t_4))`.
pub fn s_of_t<S: Scalar>(t: &S) -> Result<S> {
    let ts = shifts(t).map_err(|_| map_error(t))?;
    let (c1, c3, c4) = (-ts[1].clone(), ts[3].clone(), ts[4].clone());
    let den = (t.clone() - c1.clone()) * (c3.clone() - c4.clone());
    if den.is_zero() {
        return Err(map_error(t));
    }
    Ok(-((t.clone() + c3) * (c1 + c4)) / den)
}

/// `ds/dt` from the reduced form `s = -((t^2+2t-1)/(t^2-2t-1))^2`.
pub fn ds_dt<S: Scalar>(t: &S) -> Result<S> {
    let one = S::one();
    let two = S::from_i64(2);
    let a = t.clone() * t.clone() + two.clone() * t.clone() - one.clone();
    let b = t.clone() * t.clone() - two.clone() * t.clone() - one.clone();
    if b.is_zero() || t.is_zero() || (t.clone() - one.clone()).is_zero() || (t.clone() + one.clone()).is_zero() {
        return Err(map_error(t));
    }
    let r = a.clone() / b.clone();
    let dr = ((two.clone() * t.clone() + two.clone()) * b.clone() - a * (two.clone() * t.clone() - two.clone())) / (b.clone() * b);
    Ok(-(two * r * dr))
}

/// `(lambda, mu, t) -> (q, p, s)`.
pub fn canonical_map<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>) -> Result<StandardState<S>> {
    let ts = shifts(&st.t).map_err(|_| map_error(&st.t))?;
    let t = st.t.clone();
    let (c3, c4) = (ts[3].clone(), ts[4].clone());
    let f0 = st.lambda.clone() + t.clone();
    let f2 = st.mu.clone();
    let f4 = st.lambda.clone() - c4.clone();
    let a = t.clone() + c3.clone();
    let b = c3 - c4.clone();
    let q_den = b.clone() * f0.clone();
    let p_den = S::from_i64(4) * a.clone() * (t + c4);
    if q_den.is_zero() || p_den.is_zero() {
        return Err(map_error(&st.t));
    }
    let q = a * f4 / q_den;
    let p = b * f0.clone() * (f0 * f2 + pr.alpha()[2].clone()) / p_den;
    Ok(StandardState { s: s_of_t(&st.t)?, q, p })
}

/// `s(s-1) H` as a polynomial in `(q, p)` at fixed `s`, with `c1` in the slot
/// of `(alpha_1 - 4)`.
pub fn standard_poly_with<S: Scalar>(s: &S, pr: &PviParams<S>, c1: S) -> Poly2<S> {
    let alpha = pr.alpha();
    let q = Poly2::<S>::x;
    let p = Poly2::<S>::y;
    let c = |v: S| Poly2::constant(v);
    let one = S::one();
    let qm1 = q() - c(one.clone());
    let qms = q() - c(s.clone());
    let linear = c(c1) * q() * qm1.clone() + c(alpha[3].clone()) * q() * qms.clone()
        + c(alpha[4].clone()) * qm1.clone() * qms.clone();
    q() * qm1 * qms * p() * p() - c(S::ratio(1, 4)) * linear * p()
        + c(S::ratio(1, 16) * alpha[2].clone() * (alpha[0].clone() + alpha[2].clone())) * q()
}

pub fn standard_poly<S: Scalar>(s: &S, pr: &PviParams<S>) -> Poly2<S> {
    standard_poly_with(s, pr, pr.alpha()[1].clone() - S::from_i64(4))
}

fn standard_denominator<S: Scalar>(s: &S) -> Result<S> {
    let d = s.clone() * (s.clone() - S::one());
    if d.is_zero() {
        return Err(Error::SingularTime { t: s.to_f64() });
    }
    Ok(d)
}

pub fn standard_hamiltonian<S: Scalar>(ss: &StandardState<S>, pr: &PviParams<S>) -> Result<S> {
    Ok(standard_poly(&ss.s, pr).eval(&ss.q, &ss.p) / standard_denominator(&ss.s)?)
}

/// `(dq/ds, dp/ds) = (dH/dp, -dH/dq)`.
pub fn rhs_standard<S: Scalar>(ss: &StandardState<S>, pr: &PviParams<S>) -> Result<[S; 2]> {
    rhs_standard_with(ss, pr, pr.alpha()[1].clone() - S::from_i64(4))
}

pub fn rhs_standard_with<S: Scalar>(ss: &StandardState<S>, pr: &PviParams<S>, c1: S) -> Result<[S; 2]> {
    let h = standard_poly_with(&ss.s, pr, c1);
    let d = standard_denominator(&ss.s)?;
    Ok([
        h.d_dy().eval(&ss.q, &ss.p) / d.clone(),
        -(h.d_dx().eval(&ss.q, &ss.p) / d),
    ])
}

/// Derivative of [`rhs_standard_with`] with respect to `c1`; the right-hand
/// side is affine in `c1`.
pub fn rhs_standard_c1_gradient<S: Scalar>(ss: &StandardState<S>) -> Result<[S; 2]> {
    let d = standard_denominator(&ss.s)?;
    let quarter = S::ratio(1, 4);
    let q = ss.q.clone();
    Ok([
        -(quarter.clone() * q.clone() * (q.clone() - S::one())) / d.clone(),
        quarter * (S::from_i64(2) * q - S::one()) * ss.p.clone() / d,
    ])
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub ode: OdeOptions,
    /// Run the four-way `dlambda/dt` cross-check at every evaluation.
    pub cross_check: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions {
                forbidden: singular_times().to_vec(),
                ..OdeOptions::default()
            },
            cross_check: true,
        }
    }
}

/// A numerical solution `(lambda(t), mu(t))` with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: PviParams,
    pub solution: Solution<2>,
}

impl Trajectory {
    pub fn termination(&self) -> Termination {
        self.solution.termination
    }

    pub fn samples(&self) -> impl Iterator<Item = PviState> + '_ {
        self.solution
            .t
            .iter()
            .zip(&self.solution.y)
            .map(|(&t, y)| PviState::new(t, y[0], y[1]))
    }

    pub fn len(&self) -> usize {
        self.solution.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solution.t.is_empty()
    }

    pub fn first(&self) -> PviState {
        let y = self.solution.y[0];
        PviState::new(self.solution.t[0], y[0], y[1])
    }

    pub fn last(&self) -> PviState {
        let y = self.solution.y_last();
        PviState::new(self.solution.t_last(), y[0], y[1])
    }

    pub fn t_range(&self) -> (f64, f64) {
        let (a, b) = (self.solution.t[0], self.solution.t_last());
        (a.min(b), a.max(b))
    }

    pub fn state_at(&self, t: f64) -> Option<PviState> {
        self.solution.eval(t).map(|y| PviState::new(t, y[0], y[1]))
    }

    /// `n` equally spaced dense-output states, endpoints included.
    pub fn resample(&self, n: usize) -> Vec<PviState> {
        let (a, b) = (self.solution.t[0], self.solution.t_last());
        if n < 2 || a == b {
            return vec![self.first()];
        }
        (0..n)
            .filter_map(|i| self.state_at(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect()
    }
}

pub fn integrate(st0: &PviState, pr: &PviParams, t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    let cross = opts.cross_check;
    let f = |t: f64, y: &[f64; 2]| rhs_symmetric_with(&PviState::new(t, y[0], y[1]), pr, cross);
    let solution = ode::dopri5(f, st0.t, [st0.lambda, st0.mu], t_end, &opts.ode)?;
    Ok(Trajectory {
        params: pr.clone(),
        solution,
    })
}

/// Outcome of checking that a trajectory maps to a solution of the standard
/// Hamiltonian system.
#[derive(Clone, Debug, Serialize)]
pub struct PushforwardReport {
    pub points: usize,
    /// Max over points of `|(dq/ds, dp/ds)_observed - rhs_standard|`.
    pub max_defect: f64,
    /// Least-squares value of the coefficient in the slot of `(alpha_1 - 4)`,
    /// minus `alpha_1`, averaged over points.
    pub implied_alpha1_offset: f64,
    pub offset_spread: f64,
    /// Max defect after replacing the coefficient by its implied value.
    pub max_defect_refit: f64,
}

/// Maps `n` interior dense-output points to `(s, q, p)`, differentiates by
/// central differences of step `h` and compares with the standard system.
pub fn pushforward_check(traj: &Trajectory, n: usize, h: f64) -> Result<PushforwardReport> {
    let pr = &traj.params;
    let (a, b) = traj.t_range();
    let (lo, hi) = (a + 2.0 * h, b - 2.0 * h);
    let mut max_defect = 0.0_f64;
    let mut offsets = Vec::with_capacity(n);
    let mut refit_inputs = Vec::with_capacity(n);
    let map_at = |t: f64| -> Result<StandardState> {
        let st = traj.state_at(t).ok_or(Error::SingularTime { t })?;
        canonical_map(&st, pr)
    };
    for i in 0..n {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let (plus, minus, here) = (map_at(t + h)?, map_at(t - h)?, map_at(t)?);
        let sdot = ds_dt(&t)?;
        let observed = [
            (plus.q - minus.q) / (2.0 * h) / sdot,
            (plus.p - minus.p) / (2.0 * h) / sdot,
        ];
        let predicted = rhs_standard(&here, pr)?;
        let defect = (0..2).map(|k| (observed[k] - predicted[k]).abs()).fold(0.0, f64::max);
        max_defect = max_defect.max(defect);
        let g = rhs_standard_c1_gradient(&here)?;
        let gg = g[0] * g[0] + g[1] * g[1];
        if gg > 0.0 {
            let shift = ((observed[0] - predicted[0]) * g[0] + (observed[1] - predicted[1]) * g[1]) / gg;
            offsets.push(shift - 4.0);
        }
        refit_inputs.push((here, observed));
    }
    let mean = offsets.iter().sum::<f64>() / offsets.len().max(1) as f64;
    let spread = offsets.iter().map(|o| (o - mean).abs()).fold(0.0, f64::max);
    let mut max_defect_refit = 0.0_f64;
    for (here, observed) in &refit_inputs {
        let predicted = rhs_standard_with(here, pr, pr.alpha()[1] + mean)?;
        let defect = (0..2).map(|k| (observed[k] - predicted[k]).abs()).fold(0.0, f64::max);
        max_defect_refit = max_defect_refit.max(defect);
    }
    Ok(PushforwardReport {
        points: n,
        max_defect,
        implied_alpha1_offset: mean,
        offset_spread: spread,
        max_defect_refit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Rational};

    fn exact_state(t: Rational, lambda: Rational, mu: Rational) -> PviState<Rational> {
        PviState::new(t, lambda, mu)
    }

    fn exact_params() -> PviParams<Rational> {
        PviParams::new([q(1, 3), q(2, 7), q(-1, 5), q(5, 11)], Normalization::Intro4)
    }

    #[test]
    fn f_coords_at_two() {
        let fc = f_coords(&exact_state(q(2, 1), q(0, 1), q(5, 1))).unwrap();
        assert_eq!(fc.f, [q(2, 1), q(3, 1), q(5, 1), q(-1, 3), q(-1, 2)]);
        assert_eq!(fc.theta[0], q(-35, 6));
        assert_eq!(fc.theta[4], q(-35, 24));
    }

    #[test]
    fn theta_identity_exact() {
        for t in [q(2, 1), q(7, 3), q(-5, 2), q(1, 7)] {
            let fc = f_coords(&exact_state(t.clone(), q(3, 4), q(1, 1))).unwrap();
            let d = shift_derivatives(&t).unwrap();
            for j in NODES {
                let expected = fc.theta[0].clone() * (q(1, 1) + d[0].clone() - d[j].clone());
                assert_eq!(fc.theta[j], expected, "node {j} at t = {t}");
            }
        }
    }

    #[test]
    fn differences_are_lambda_free() {
        let a = f_coords(&exact_state(q(7, 3), q(1, 2), q(0, 1))).unwrap();
        let b = f_coords(&exact_state(q(7, 3), q(-9, 4), q(0, 1))).unwrap();
        for i in NODES {
            for j in NODES {
                assert_eq!(a.f[i].clone() - a.f[j].clone(), b.f[i].clone() - b.f[j].clone());
            }
        }
    }

    #[test]
    fn singular_inputs() {
        assert!(matches!(shifts(&1.0), Err(Error::SingularTime { .. })));
        assert!(matches!(f_coords(&PviState::new(0.0, 1.0, 1.0)), Err(Error::SingularTime { .. })));
        let root = q(1, 1);
        assert!(shifts(&-root).is_err());
    }

    #[test]
    fn symmetric_and_hamiltonian_agree_exactly() {
        let pr = exact_params();
        for (t, l, m) in [(q(7, 3), q(2, 5), q(-3, 7)), (q(-5, 2), q(1, 9), q(4, 1))] {
            let st = exact_state(t, l, m);
            assert_eq!(rhs_symmetric(&st, &pr).unwrap(), rhs_hamiltonian(&st, &pr).unwrap());
        }
    }

    #[test]
    fn unit_alphas_collapse_rhs() {
        let pr = PviParams::new([q(1, 1), q(1, 1), q(1, 1), q(1, 1)], Normalization::Intro4);
        assert_eq!(pr.alpha()[2], q(0, 1));
        let fc = f_coords(&exact_state(q(3, 1), q(1, 2), q(2, 1))).unwrap();
        let rhs = theta_rhs(&fc, pr.alpha());
        let prod = fc.f.iter().cloned().fold(q(1, 1), |a, b| a * b);
        for j in NODES {
            assert_eq!(rhs[j], q(2, 1) * prod.clone() + fc.theta[j].clone());
        }
    }

    #[test]
    fn hprime_examples() {
        let pr = exact_params();
        let a = pr.alpha().clone();
        let st = exact_state(q(7, 3), q(2, 5), q(0, 1));
        let fc = f_coords(&st).unwrap();
        let bracket = (a[0].clone() - q(1, 1)) * fc.f[0].clone()
            + (a[1].clone() + a[2].clone() - q(1, 1)) * fc.f[1].clone()
            + (a[3].clone() + a[2].clone() - q(1, 1)) * fc.f[3].clone()
            + (a[4].clone() + a[2].clone() - q(1, 1)) * fc.f[4].clone();
        let expected = a[2].clone() * fc.f[0].clone() * bracket / fc.theta[0].clone();
        assert_eq!(hamiltonian_hprime(&st, &pr).unwrap(), expected);
        let st = exact_state(q(7, 3), q(-7, 3), q(0, 1));
        assert_eq!(hamiltonian_hprime(&st, &pr).unwrap(), q(0, 1));
    }

    #[test]
    fn canonical_map_examples() {
        assert_eq!(s_of_t(&q(2, 1)).unwrap(), q(-49, 1));
        for t in [q(2, 1), q(7, 3), q(-5, 2)] {
            let a = t.clone() * t.clone() + q(2, 1) * t.clone() - q(1, 1);
            let b = t.clone() * t.clone() - q(2, 1) * t.clone() - q(1, 1);
            let r = a / b;
            assert_eq!(s_of_t(&t).unwrap(), -(r.clone() * r));
        }
        let pr = exact_params();
        let ss = canonical_map(&exact_state(q(2, 1), q(1, 2), q(3, 1)), &pr).unwrap();
        assert_eq!(ss.q, q(0, 1));
        // F0 F2 = -alpha_2 gives p = 0.
        let lambda = q(1, 3);
        let f0 = lambda.clone() + q(2, 1);
        let mu = -pr.alpha()[2].clone() / f0;
        let ss = canonical_map(&exact_state(q(2, 1), lambda, mu), &pr).unwrap();
        assert_eq!(ss.p, q(0, 1));
    }

    #[test]
    fn ds_dt_matches_difference_quotient() {
        for t in [2.0, 3.3, -4.1, 0.3] {
            let h = 1e-6;
            let fd = (s_of_t(&(t + h)).unwrap() - s_of_t(&(t - h)).unwrap()) / (2.0 * h);
            let exact = ds_dt(&t).unwrap();
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "t = {t}");
        }
    }

    #[test]
    fn standard_rhs_examples() {
        let pr = exact_params();
        let ss = StandardState { s: q(3, 1), q: q(0, 1), p: q(0, 1) };
        let a = pr.alpha();
        let expected = -(q(1, 16) * a[2].clone() * (a[0].clone() + a[2].clone())) / q(6, 1);
        assert_eq!(rhs_standard(&ss, &pr).unwrap()[1], expected);
        let ss = StandardState { s: q(3, 1), q: q(0, 1), p: q(5, 2) };
        let lin = -(q(1, 4) * a[4].clone() * q(3, 1)) / q(6, 1);
        assert_eq!(rhs_standard(&ss, &pr).unwrap()[0], lin);
    }

    #[test]
    fn normalization_validation() {
        let p = PviParams::new([0.3, 0.2, 0.1, 0.4], Normalization::Intro4);
        assert!((p.null_sum() - 4.0).abs() < 1e-15);
        let p = PviParams::new([0.3, 0.2, 0.1, 0.4], Normalization::Sec4);
        assert!((p.null_sum() - 1.0).abs() < 1e-15);
        assert!(matches!(
            PviParams::from_alphas([0.3, 0.2, 1.6, 0.1, 0.4], Normalization::Intro4),
            Err(Error::Normalization { .. })
        ));
        assert!(PviParams::from_alphas([0.3, 0.2, 1.5, 0.1, 0.4], Normalization::Intro4).is_ok());
        assert_eq!("sec4".parse::<Normalization>().unwrap(), Normalization::Sec4);
    }
}
