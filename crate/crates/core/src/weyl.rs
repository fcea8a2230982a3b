//! Bäcklund transformations: the affine Weyl group generated by `r_0..r_4`
//! acting on the parameters and on `(lambda, mu)` through the `F_j`.

use std::fmt;
use std::str::FromStr;

use crate::algebra::CARTAN;
use crate::error::{Error, Result};
use crate::painleve::{f_coords, rhs_symmetric, shifts, PviParams, PviState, Trajectory};
use crate::reduction::NODES;
use crate::scalar::Scalar;

/// `|F_i|` below this is treated as lying on the mirror of `r_i`.
pub const MIRROR_TOL: f64 = 1e-6;

/// Orientation matrix of the Dynkin diagram.
pub const ORIENTATION: [[i64; 5]; 5] = [
    [0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0],
    [-1, -1, 0, -1, -1],
    [0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0],
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanData {
    pub a: [[i64; 5]; 5],
    pub u: [[i64; 5]; 5],
}

impl Default for CartanData {
    fn default() -> Self {
        Self {
            a: CARTAN,
            u: ORIENTATION,
        }
    }
}

impl CartanData {
    /// `A` symmetric with diagonal 2; `U` antisymmetric with `|u_ij| = 1`
    /// exactly on the edges `a_ij = -1`.
    pub fn check(&self) -> Result<()> {
        for i in 0..5 {
            if self.a[i][i] != 2 {
                return Err(Error::Defect(format!("a_{i}{i} = {}", self.a[i][i])));
            }
            for j in 0..5 {
                if self.a[i][j] != self.a[j][i] {
                    return Err(Error::Defect(format!("A not symmetric at ({i}, {j})")));
                }
                if self.u[i][j] != -self.u[j][i] {
                    return Err(Error::Defect(format!("U not antisymmetric at ({i}, {j})")));
                }
                let edge = i != j && self.a[i][j] == -1;
                if (self.u[i][j].abs() == 1) != edge || self.u[i][j].abs() > 1 {
                    return Err(Error::Defect(format!("U does not match the diagram at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

fn check_node(i: usize) -> Result<()> {
    if i < 5 {
        Ok(())
    } else {
        Err(Error::NodeIndex(i))
    }
}

/// `r_i(alpha_j) = alpha_j - alpha_i a_ij`.
pub fn reflect_params<S: Scalar>(i: usize, pr: &PviParams<S>) -> Result<PviParams<S>> {
    check_node(i)?;
    let a = pr.alpha();
    let alpha = std::array::from_fn(|j| a[j].clone() - a[i].clone() * S::from_i64(CARTAN[i][j]));
    PviParams::from_alphas(alpha, pr.normalization())
}

/// `r_i(F_j) = F_j - (alpha_i / F_i) u_ij`, read back as `(lambda, mu)`.
pub fn reflect_state<S: Scalar>(i: usize, st: &PviState<S>, pr: &PviParams<S>) -> Result<PviState<S>> {
    reflect_state_at(i, st, pr, 0)
}

fn reflect_state_at<S: Scalar>(i: usize, st: &PviState<S>, pr: &PviParams<S>, position: usize) -> Result<PviState<S>> {
    check_node(i)?;
    let fc = f_coords(st)?;
    let fi = fc.f[i].clone();
    let alpha_i = pr.alpha()[i].clone();
    if alpha_i.is_zero() {
        return Ok(st.clone());
    }
    if fi.is_negligible(MIRROR_TOL) || fi.is_zero() {
        return Err(Error::OnMirror { index: i, position });
    }
    let shift = alpha_i / fi;
    let f_new: [S; 5] = std::array::from_fn(|j| fc.f[j].clone() - shift.clone() * S::from_i64(ORIENTATION[i][j]));

    let ts = shifts(&st.t)?;
    let lambdas = NODES.map(|j| f_new[j].clone() + ts[j].clone());
    let lambda = lambdas[0].clone();
    let scale = 1.0 + lambda.to_f64().abs() + shift.to_f64().abs();
    for (k, l) in lambdas.iter().enumerate().skip(1) {
        if !(l.clone() - lambda.clone()).is_negligible(1e-12 * scale) {
            return Err(Error::ConsistencyFailure {
                node: NODES[k],
                value: l.to_f64(),
                reference: lambda.to_f64(),
            });
        }
    }
    Ok(PviState::new(st.t.clone(), lambda, f_new[2].clone()))
}

/// A word in the generators, applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WeylWord(pub Vec<usize>);

impl WeylWord {
    pub fn new(letters: Vec<usize>) -> Result<Self> {
        for &i in &letters {
            check_node(i)?;
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for WeylWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::default());
        }
        let letters = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i < 5)
                    .ok_or_else(|| Error::InvalidWord(format!("`{}` is not a node in 0..=4", tok.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(letters))
    }
}

impl fmt::Display for WeylWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

pub fn apply_word_params<S: Scalar>(w: &WeylWord, pr: &PviParams<S>) -> Result<PviParams<S>> {
    w.0.iter().try_fold(pr.clone(), |p, &i| reflect_params(i, &p))
}

/// Applies the letters in order; a mirror hit reports the failing position.
pub fn apply_word<S: Scalar>(w: &WeylWord, st: &PviState<S>, pr: &PviParams<S>) -> Result<(PviState<S>, PviParams<S>)> {
    let mut state = st.clone();
    let mut params = pr.clone();
    for (position, &i) in w.0.iter().enumerate() {
        state = reflect_state_at(i, &state, &params, position)?;
        params = reflect_params(i, &params)?;
    }
    Ok((state, params))
}

/// The defining relations: `r_i^2`, `(r_i r_j)^2` when `a_ij = 0` and
/// `(r_i r_j)^3` when `a_ij = -1`.
pub fn coxeter_relations() -> Vec<WeylWord> {
    let mut out = Vec::new();
    for i in 0..5 {
        out.push(WeylWord(vec![i, i]));
    }
    for i in 0..5 {
        for j in (i + 1)..5 {
            let reps = match CARTAN[i][j] {
                0 => 2,
                -1 => 3,
                _ => continue,
            };
            out.push(WeylWord([i, j].repeat(reps)));
        }
    }
    out
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct CoxeterReport {
    pub relations: usize,
    /// Relations failing on parameters (must be empty).
    pub param_failures: Vec<String>,
    pub state_checks: usize,
    pub skipped_on_mirror: usize,
    pub max_state_residual: f64,
}

impl CoxeterReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.param_failures.is_empty() && self.max_state_residual < tol
    }
}

/// Checks every relation on the given parameters (in the parameters' own
/// arithmetic) and on each state, skipping states that hit a mirror.
pub fn verify_coxeter<S: Scalar>(params: &PviParams<S>, points: &[(PviState, PviParams)]) -> CoxeterReport {
    let relations = coxeter_relations();
    let mut report = CoxeterReport {
        relations: relations.len(),
        ..CoxeterReport::default()
    };
    for w in &relations {
        match apply_word_params(w, params) {
            Ok(p) if p == *params => {}
            Ok(_) => report.param_failures.push(w.to_string()),
            Err(e) => report.param_failures.push(format!("{w}: {e}")),
        }
    }
    for (st, pr) in points {
        for w in &relations {
            match apply_word(w, st, pr) {
                Ok((img, _)) => {
                    report.state_checks += 1;
                    let r = ((img.lambda - st.lambda).abs() / (1.0 + st.lambda.abs()))
                        .max((img.mu - st.mu).abs() / (1.0 + st.mu.abs()));
                    report.max_state_residual = report.max_state_residual.max(r);
                }
                Err(Error::OnMirror { .. }) => report.skipped_on_mirror += 1,
                Err(_) => report.max_state_residual = f64::INFINITY,
            }
        }
    }
    report
}

/// How well the image of a trajectory under a word solves the equation with
/// the transformed parameters.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct BacklundReport {
    pub word: String,
    pub points: usize,
    pub skipped_on_mirror: usize,
    /// Max of `|observed - predicted| / (1 + |predicted|)` over both
    /// components.
    pub max_defect: f64,
}

/// Maps `n` interior dense-output points through `w`, differentiates the
/// image by the five-point central difference of step `h` and compares with
/// the symmetric right-hand side at the transformed parameters.
pub fn backlund_defect(traj: &Trajectory, w: &WeylWord, n: usize, h: f64) -> Result<BacklundReport> {
    let pr = &traj.params;
    let image_params = apply_word_params(w, pr)?;
    let (a, b) = traj.t_range();
    let (lo, hi) = (a + 3.0 * h, b - 3.0 * h);
    let mut report = BacklundReport {
        word: w.to_string(),
        ..BacklundReport::default()
    };
    let image_at = |t: f64| -> Result<PviState> {
        let st = traj.state_at(t).ok_or(Error::SingularTime { t })?;
        apply_word(w, &st, pr).map(|(img, _)| img)
    };
    for k in 0..n {
        let t = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        let stencil: Result<Vec<PviState>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|s| image_at(t + s * h)).collect();
        let pts = match stencil {
            Ok(v) => v,
            Err(Error::OnMirror { .. }) => {
                report.skipped_on_mirror += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let diff = |f: fn(&PviState) -> f64| {
            (f(&pts[0]) - 8.0 * f(&pts[1]) + 8.0 * f(&pts[3]) - f(&pts[4])) / (12.0 * h)
        };
        let observed = [diff(|s| s.lambda), diff(|s| s.mu)];
        let predicted = rhs_symmetric(&pts[2], &image_params)?;
        let defect = (0..2)
            .map(|c| (observed[c] - predicted[c]).abs() / (1.0 + predicted[c].abs()))
            .fold(0.0, f64::max);
        report.points += 1;
        report.max_defect = report.max_defect.max(defect);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve::Normalization;
    use crate::scalar::{q, Rational};

    fn params() -> PviParams<Rational> {
        PviParams::new([q(1, 3), q(2, 7), q(-1, 5), q(5, 11)], Normalization::Intro4)
    }

    #[test]
    fn cartan_data_is_consistent() {
        CartanData::default().check().unwrap();
        let mut bad = CartanData::default();
        bad.u[0][2] = 0;
        assert!(bad.check().is_err());
    }

    #[test]
    fn parameter_action() {
        let pr = params();
        let a = pr.alpha().clone();
        let r2 = reflect_params(2, &pr).unwrap();
        assert_eq!(r2.alpha()[2], -a[2].clone());
        let r0 = reflect_params(0, &pr).unwrap();
        assert_eq!(r0.alpha()[2], a[2].clone() + a[0].clone());
        for i in 0..5 {
            assert_eq!(reflect_params(i, &pr).unwrap().null_sum(), q(4, 1));
        }
        assert!(matches!(reflect_params(5, &pr), Err(Error::NodeIndex(5))));
    }

    #[test]
    fn state_action_examples() {
        let pr = PviParams::new([q(1, 1), q(1, 2), q(1, 3), q(1, 4)], Normalization::Intro4);
        let st = PviState::new(q(2, 1), q(0, 1), q(1, 1));
        let img = reflect_state(0, &st, &pr).unwrap();
        assert_eq!(img, PviState::new(q(2, 1), q(0, 1), q(1, 2)));
        let img = reflect_state(2, &st, &pr).unwrap();
        assert_eq!(img.lambda, pr.alpha()[2].clone());
        assert_eq!(img.mu, q(1, 1));
        let on_mirror = PviState::new(q(2, 1), q(-2, 1), q(1, 1));
        assert!(matches!(reflect_state(0, &on_mirror, &pr), Err(Error::OnMirror { index: 0, .. })));
    }

    #[test]
    fn zero_parameter_is_identity() {
        let pr = PviParams::new([q(0, 1), q(1, 2), q(1, 3), q(1, 4)], Normalization::Intro4);
        let st = PviState::new(q(2, 1), q(-2, 1), q(1, 1));
        assert_eq!(reflect_state(0, &st, &pr).unwrap(), st);
    }

    #[test]
    fn relations_hold_exactly() {
        let pr = params();
        let st = PviState::new(q(7, 3), q(3, 5), q(-3, 7));
        for w in coxeter_relations() {
            let (img, p) = apply_word(&w, &st, &pr).unwrap();
            assert_eq!(img, st, "word {w}");
            assert_eq!(p, pr, "word {w}");
        }
        assert_eq!(coxeter_relations().len(), 5 + 4 + 6);
    }

    #[test]
    fn word_parsing() {
        let w: WeylWord = "0, 2,1,2".parse().unwrap();
        assert_eq!(w.letters(), &[0, 2, 1, 2]);
        assert_eq!(w.to_string(), "0,2,1,2");
        assert!("".parse::<WeylWord>().unwrap().is_empty());
        assert!(matches!("0,5".parse::<WeylWord>(), Err(Error::InvalidWord(_))));
        assert!("a".parse::<WeylWord>().is_err());
    }

    #[test]
    fn mirror_position_is_reported() {
        let pr = PviParams::new([q(1, 1), q(1, 2), q(1, 3), q(1, 4)], Normalization::Intro4);
        let st = PviState::new(q(2, 1), q(-2, 1), q(1, 1));
        let w: WeylWord = "1,0".parse().unwrap();
        assert!(matches!(apply_word(&w, &st, &pr), Err(Error::OnMirror { index: 0, position: 1 })));
    }
}
