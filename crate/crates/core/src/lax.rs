//! The Lax pair `d_s Phi = M~ Phi`, `dPhi/dt = B~ Phi` for the reduced system
//! with `t_{1,1} = t`, `t_{1,2} = 1`.
//!
//! `M~` is obtained from `M = t Lambda_{1,1} + Lambda_{1,2} + ...` by
//! conjugation with `exp(-lambda f2)`; [`gauge_check`] compares the two
//! routes. [`compatibility_residual`] evaluates
//! `R = dM~/dt - [d_s, B~] + [M~, B~]`, which vanishes on solutions.

use serde::Serialize;

use crate::algebra::{ad_exp_conjugate, build_chevalley, ChevalleyBasis, Element, Gradation};
use crate::error::Result;
use crate::heisenberg::lambda_plus_one;
use crate::painleve::{alpha2_bracket, f_coords, rhs_symmetric, shift_derivatives, PviParams, PviState, Trajectory};
use crate::reduction::{MCoefficients, NODES};
use crate::scalar::Scalar;

/// Shared algebraic data: generators, `d_s`, `e_{2j}`, `Lambda_{1,i}`.
#[derive(Clone, Debug)]
pub struct LaxContext<S> {
    pub basis: ChevalleyBasis<S>,
    pub grad: Gradation<S>,
    e2j: [Element<S>; 5],
    lambda1: [Element<S>; 2],
}

impl<S: Scalar> LaxContext<S> {
    pub fn new() -> Result<Self> {
        let basis = build_chevalley()?;
        let grad = Gradation::new(&basis)?;
        let e2j = std::array::from_fn(|j| if j == 2 { Element::zero() } else { basis.e2(j) });
        let lambda1 = lambda_plus_one(&basis).basis;
        Ok(Self {
            basis,
            grad,
            e2j,
            lambda1,
        })
    }

    /// `e_{2j} = [e_2, e_j]`.
    pub fn e2j(&self, j: usize) -> &Element<S> {
        &self.e2j[j]
    }
}

/// Sign of the `alpha`-linear part of `Theta_0 x~`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XTildeSign {
    /// `Theta_0 x~ = F0 F2 (F0-F1-F3-F4) + sum (alpha_j+alpha_2-1) F_j`.
    /// The compatibility condition fails with this sign.
    Plus,
    /// The same with `- sum (alpha_j+alpha_2-1) F_j`.
    #[default]
    Minus,
}

#[derive(Clone, Debug)]
pub struct LaxOptions<S> {
    pub x_tilde: XTildeSign,
    /// Coefficient of `K` in `B~`; it never enters the residual.
    pub u2: S,
}

impl<S: Scalar> Default for LaxOptions<S> {
    fn default() -> Self {
        Self {
            x_tilde: XTildeSign::default(),
            u2: S::zero(),
        }
    }
}

fn half<S: Scalar>() -> S {
    S::ratio(1, 2)
}

/// `M~` for the state `(t, lambda, mu)`; `alpha_2` does not appear.
pub fn build_m_tilde<S: Scalar>(ctx: &LaxContext<S>, st: &PviState<S>, pr: &PviParams<S>) -> Result<Element<S>> {
    let fc = f_coords(st)?;
    let b = &ctx.basis;
    let alpha = pr.alpha();
    let t = st.t.clone();
    let one = S::one();
    let sq_sum = NODES.iter().fold(S::zero(), |acc, &j| acc + alpha[j].clone() * alpha[j].clone());
    let mut m = b.k.scale(&((sq_sum - S::from_i64(4)) * S::ratio(1, 16)));
    for j in NODES {
        m = m - b.coroot[j].scale(&(half::<S>() * (alpha[j].clone() - one.clone())));
    }
    let f = &fc.f;
    Ok(m + b.e[2].scale(&f[2])
        - b.e[0].scale(&f[0])
        + b.e[1].scale(&((t.clone() - one.clone()) * f[1].clone()))
        - b.e[3].scale(&((t.clone() + one.clone()) * f[3].clone()))
        - b.e[4].scale(&(t.clone() * f[4].clone()))
        + ctx.e2j(0).clone()
        - ctx.e2j(1).scale(&(t.clone() - one.clone()))
        + ctx.e2j(3).scale(&(t.clone() + one))
        + ctx.e2j(4).scale(&t))
}

/// `dM~/dt` along a path with the given `(dlambda/dt, dmu/dt)`.
pub fn m_tilde_derivative<S: Scalar>(
    ctx: &LaxContext<S>,
    st: &PviState<S>,
    rates: &[S; 2],
) -> Result<Element<S>> {
    let fc = f_coords(st)?;
    let dts = shift_derivatives(&st.t)?;
    let b = &ctx.basis;
    let t = st.t.clone();
    let one = S::one();
    let [dl, dm] = rates.clone();
    let df = |j: usize| dl.clone() - dts[j].clone();
    let f = &fc.f;
    Ok(b.e[2].scale(&dm) - b.e[0].scale(&df(0))
        + b.e[1].scale(&(f[1].clone() + (t.clone() - one.clone()) * df(1)))
        - b.e[3].scale(&(f[3].clone() + (t.clone() + one) * df(3)))
        - b.e[4].scale(&(f[4].clone() + t * df(4)))
        - ctx.e2j(1).clone()
        + ctx.e2j(3).clone()
        + ctx.e2j(4).clone())
}

/// Coefficients `u~_j` (slot 2 holds `u~_2`) and `x~` of `B~`.
#[derive(Clone, Debug, PartialEq)]
pub struct BTildeCoefficients<S> {
    pub u: [S; 5],
    pub x: S,
}

pub fn b_tilde_coefficients<S: Scalar>(st: &PviState<S>, pr: &PviParams<S>, opts: &LaxOptions<S>) -> Result<BTildeCoefficients<S>> {
    let fc = f_coords(st)?;
    let f = &fc.f;
    let alpha = pr.alpha();
    let one = S::one();
    let two = S::from_i64(2);
    let theta0 = fc.theta[0].clone();
    let prod = |skip: &[usize], from: &[usize]| {
        from.iter()
            .filter(|i| !skip.contains(i))
            .fold(S::one(), |acc, &i| acc * f[i].clone())
    };
    let spread = f[0].clone() - f[1].clone() - f[3].clone() - f[4].clone();
    let all = [0usize, 1, 2, 3, 4];

    let mut u: [S; 5] = std::array::from_fn(|_| S::zero());
    u[2] = opts.u2.clone();
    for j in NODES {
        let mut num = prod(&[j], &all);
        for i in NODES {
            if i != j {
                num = num - half::<S>() * (alpha[i].clone() + alpha[j].clone() - two.clone()) * prod(&[i, j], &NODES);
            }
        }
        num = num - half::<S>() * (alpha[j].clone() - one.clone()) * f[0].clone() * spread.clone();
        u[j] = num / theta0.clone();
    }
    let linear = alpha2_bracket(f, alpha);
    let quad = f[0].clone() * f[2].clone() * spread;
    let x = match opts.x_tilde {
        XTildeSign::Plus => quad + linear,
        XTildeSign::Minus => quad - linear,
    } / theta0;
    Ok(BTildeCoefficients { u, x })
}

pub fn build_b_tilde<S: Scalar>(
    ctx: &LaxContext<S>,
    st: &PviState<S>,
    pr: &PviParams<S>,
    opts: &LaxOptions<S>,
) -> Result<Element<S>> {
    let c = b_tilde_coefficients(st, pr, opts)?;
    let b = &ctx.basis;
    let one = S::one();
    let lambda = st.lambda.clone();
    let mut out = b.k.scale(&c.u[2]);
    for j in NODES {
        out = out + b.coroot[j].scale(&c.u[j]);
    }
    Ok(out + b.e[2].scale(&c.x) - b.e[0].clone()
        + b.e[1].scale(&(lambda.clone() + one.clone()))
        - b.e[3].scale(&(lambda.clone() - one))
        - b.e[4].scale(&lambda)
        - ctx.e2j(1).clone()
        + ctx.e2j(3).clone()
        + ctx.e2j(4).clone())
}

/// `M = t1 Lambda_{1,1} + t2 Lambda_{1,2} + sum kappa_j h_j + eta h2 + phi e2 + psi f2`.
pub fn build_m_raw<S: Scalar>(ctx: &LaxContext<S>, m: &MCoefficients<S>) -> Element<S> {
    let b = &ctx.basis;
    let mut out = ctx.lambda1[0].scale(&m.t1) + ctx.lambda1[1].scale(&m.t2);
    for (k, &j) in m.kappa.iter().zip(&NODES) {
        out = out + b.coroot[j].scale(k);
    }
    out + b.coroot[2].scale(&m.eta) + b.e[2].scale(&m.phi) + b.f[2].scale(&m.psi)
}

/// Parts of `x` outside the Borel subalgebra: the sum of its negative
/// `d_s`-components, and its `f2` coefficient.
pub fn borel_defect<S: Scalar>(ctx: &LaxContext<S>, x: &Element<S>) -> (Element<S>, S) {
    let negative = ctx
        .grad
        .degree_s(x)
        .into_iter()
        .filter(|(k, _)| *k < 0)
        .map(|(_, v)| v)
        .sum();
    (negative, x.form(&ctx.basis.e[2]))
}

pub fn is_borel<S: Scalar>(ctx: &LaxContext<S>, x: &Element<S>) -> bool {
    let (neg, f2) = borel_defect(ctx, x);
    neg.is_zero() && f2.is_zero()
}

#[derive(Clone, Debug)]
pub struct GaugeReport<S> {
    /// `exp(-lambda f2) M exp(lambda f2)`.
    pub conjugated: Element<S>,
    /// Its `f2` coefficient.
    pub f2_component: S,
    /// `phi lambda^2 + (2 eta - sum kappa) lambda - psi`.
    pub quadratic: S,
    /// Max deviation from `M~` away from `K`; `None` when `t1` is a singular
    /// time and `M~` is undefined.
    pub m_tilde_mismatch: Option<f64>,
    /// Deviation of the `K` coefficient.
    pub central_mismatch: Option<S>,
}

/// Conjugates `M` by `exp(-lambda f2)` and compares with `M~` built from
/// `(t1, lambda, phi)` and the parameters.
pub fn gauge_check<S: Scalar>(
    ctx: &LaxContext<S>,
    m: &MCoefficients<S>,
    lambda: &S,
    pr: &PviParams<S>,
) -> Result<GaugeReport<S>> {
    let raw = build_m_raw(ctx, m);
    let conjugated = ad_exp_conjugate(&ctx.basis.f[2], &-lambda.clone(), &raw)?;
    let f2_component = conjugated.form(&ctx.basis.e[2]);
    let kappa_sum = m.kappa.iter().cloned().fold(S::zero(), |a, b| a + b);
    let quadratic = m.phi.clone() * lambda.clone() * lambda.clone()
        + (S::from_i64(2) * m.eta.clone() - kappa_sum) * lambda.clone()
        - m.psi.clone();
    let diff = build_m_tilde(ctx, &PviState::new(m.t1.clone(), lambda.clone(), m.phi.clone()), pr)
        .ok()
        .map(|explicit| conjugated.clone() - explicit);
    Ok(GaugeReport {
        f2_component,
        quadratic,
        m_tilde_mismatch: diff.as_ref().map(|d| d.without_central().max_abs()),
        central_mismatch: diff.map(|d| d.central().clone()),
        conjugated,
    })
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport<S> {
    pub residual: Element<S>,
    /// Max coefficient of `R` away from `K`.
    pub norm: f64,
    pub central: S,
}

/// `R` with `(dlambda/dt, dmu/dt)` from the symmetric form.
pub fn compatibility_residual<S: Scalar>(
    ctx: &LaxContext<S>,
    st: &PviState<S>,
    pr: &PviParams<S>,
    opts: &LaxOptions<S>,
) -> Result<CompatibilityReport<S>> {
    let rates = rhs_symmetric(st, pr)?;
    compatibility_residual_with_rates(ctx, st, pr, &rates, opts)
}

/// `R` with caller-supplied rates, e.g. to probe sensitivity.
pub fn compatibility_residual_with_rates<S: Scalar>(
    ctx: &LaxContext<S>,
    st: &PviState<S>,
    pr: &PviParams<S>,
    rates: &[S; 2],
    opts: &LaxOptions<S>,
) -> Result<CompatibilityReport<S>> {
    let dm = m_tilde_derivative(ctx, st, rates)?;
    finish_residual(ctx, st, pr, dm, opts)
}

fn finish_residual<S: Scalar>(
    ctx: &LaxContext<S>,
    st: &PviState<S>,
    pr: &PviParams<S>,
    dm: Element<S>,
    opts: &LaxOptions<S>,
) -> Result<CompatibilityReport<S>> {
    let m = build_m_tilde(ctx, st, pr)?;
    let b = build_b_tilde(ctx, st, pr, opts)?;
    let residual = dm - ctx.grad.d_s.bracket(&b) + m.bracket(&b);
    Ok(CompatibilityReport {
        norm: residual.without_central().max_abs(),
        central: residual.central().clone(),
        residual,
    })
}

/// As [`compatibility_residual`] with `dM~/dt` taken by central differences
/// of step `h` along the tangent of the flow.
pub fn compatibility_residual_fd(
    ctx: &LaxContext<f64>,
    st: &PviState,
    pr: &PviParams,
    h: f64,
    opts: &LaxOptions<f64>,
) -> Result<CompatibilityReport<f64>> {
    let [dl, dm] = rhs_symmetric(st, pr)?;
    let at = |s: f64| PviState::new(st.t + s * h, st.lambda + s * h * dl, st.mu + s * h * dm);
    let diff = build_m_tilde(ctx, &at(1.0), pr)? - build_m_tilde(ctx, &at(-1.0), pr)?;
    finish_residual(ctx, st, pr, diff.scale(&(0.5 / h)), opts)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TrajectoryLaxReport {
    pub samples: usize,
    pub max_residual: f64,
    pub worst_t: f64,
}

/// Compatibility residual at `n` dense-output points of a trajectory.
pub fn trajectory_residual(
    ctx: &LaxContext<f64>,
    traj: &Trajectory,
    n: usize,
    opts: &LaxOptions<f64>,
) -> Result<TrajectoryLaxReport> {
    let mut report = TrajectoryLaxReport::default();
    for st in traj.resample(n) {
        let r = compatibility_residual(ctx, &st, &traj.params, opts)?;
        report.samples += 1;
        if r.norm > report.max_residual || report.samples == 1 {
            report.max_residual = r.norm.max(report.max_residual);
            report.worst_t = st.t;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve::Normalization;
    use crate::reduction::m_from_lambda_mu;
    use crate::scalar::{q, Rational};

    fn ctx() -> LaxContext<Rational> {
        LaxContext::new().unwrap()
    }

    fn point() -> (PviState<Rational>, PviParams<Rational>) {
        (
            PviState::new(q(7, 3), q(2, 5), q(-3, 7)),
            PviParams::new([q(1, 3), q(2, 7), q(-1, 5), q(5, 11)], Normalization::Intro4),
        )
    }

    #[test]
    fn operators_are_borel() {
        let c = ctx();
        let (st, pr) = point();
        let m = build_m_tilde(&c, &st, &pr).unwrap();
        let b = build_b_tilde(&c, &st, &pr, &LaxOptions::default()).unwrap();
        assert!(is_borel(&c, &m));
        assert!(is_borel(&c, &b));
        assert!(!is_borel(&c, &c.basis.f[2]));
        assert_eq!(m.form(&c.basis.f[2]), st.mu);
        assert_eq!(b.form(&c.basis.f[1]), st.lambda.clone() + q(1, 1));
    }

    #[test]
    fn unit_alphas_have_no_coroot_terms() {
        let c = ctx();
        let pr = PviParams::new([q(1, 1), q(1, 1), q(1, 1), q(1, 1)], Normalization::Intro4);
        let st = point().0;
        let m = build_m_tilde(&c, &st, &pr).unwrap();
        assert_eq!(m.central(), &q(0, 1));
        assert_eq!(c.grad.component(&m, 0), c.basis.e[2].scale(&st.mu));
    }

    #[test]
    fn x_tilde_at_vanishing_f0() {
        let (_, pr) = point();
        let st = PviState::new(q(7, 3), q(-7, 3), q(2, 1));
        let fc = f_coords(&st).unwrap();
        let plus = LaxOptions {
            x_tilde: XTildeSign::Plus,
            u2: q(0, 1),
        };
        let coeffs = b_tilde_coefficients(&st, &pr, &plus).unwrap();
        assert_eq!(coeffs.x, alpha2_bracket(&fc.f, pr.alpha()) / fc.theta[0].clone());
    }

    #[test]
    fn raw_operator_examples() {
        let c = ctx();
        let zero = MCoefficients::zero(q(0, 1), q(0, 1));
        assert!(build_m_raw(&c, &zero).is_zero());
        let unit = MCoefficients::zero(q(1, 1), q(0, 1));
        assert_eq!(build_m_raw(&c, &unit), c.lambda1[0]);
        let degrees: Vec<i32> = c.grad.degree_s(&build_m_raw(&c, &MCoefficients::zero(q(3, 1), q(1, 1)))).into_keys().collect();
        assert_eq!(degrees, vec![1]);
    }

    #[test]
    fn gauge_route_matches_explicit_operator() {
        let c = ctx();
        let (st, pr) = point();
        let m = m_from_lambda_mu(&st.lambda, &st.mu, &pr.nodes(), st.t.clone(), q(1, 1)).unwrap();
        let report = gauge_check(&c, &m, &st.lambda, &pr).unwrap();
        assert_eq!(report.f2_component, q(0, 1));
        assert_eq!(report.quadratic, q(0, 1));
        assert_eq!(report.m_tilde_mismatch, Some(0.0));
        assert_eq!(report.central_mismatch, Some(q(0, 1)));

        let mut trivial = MCoefficients::zero(q(0, 1), q(0, 1));
        trivial.phi = q(1, 1);
        let r = gauge_check(&c, &trivial, &q(0, 1), &pr).unwrap();
        assert_eq!(r.f2_component, q(0, 1));
        assert_eq!(r.m_tilde_mismatch, None);
    }

    #[test]
    fn compatibility_depends_on_normalization_and_sign() {
        let c = ctx();
        let (st, pr) = point();
        let ok = compatibility_residual(&c, &st, &pr, &LaxOptions::default()).unwrap();
        assert!(ok.residual.is_zero());

        let plus = LaxOptions {
            x_tilde: XTildeSign::Plus,
            u2: q(0, 1),
        };
        assert!(!compatibility_residual(&c, &st, &pr, &plus).unwrap().residual.is_zero());

        let sec4 = PviParams::new(pr.nodes(), Normalization::Sec4);
        assert!(!compatibility_residual(&c, &st, &sec4, &LaxOptions::default()).unwrap().residual.is_zero());
    }

    #[test]
    fn u2_is_inert() {
        let c = ctx();
        let (st, pr) = point();
        let a = compatibility_residual(&c, &st, &pr, &LaxOptions::default()).unwrap();
        let shifted = LaxOptions {
            x_tilde: XTildeSign::Minus,
            u2: q(1, 1),
        };
        let b = compatibility_residual(&c, &st, &pr, &shifted).unwrap();
        assert_eq!(a.residual, b.residual);
    }
}
