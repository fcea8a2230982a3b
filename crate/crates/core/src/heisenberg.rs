//! The graded Heisenberg subalgebra of type s = (1,1,0,1,1).
//!
//! Its degree-one part is spanned by two explicit elements `Lambda_{1,1}`,
//! `Lambda_{1,2}`; every other graded piece is recovered as the centralizer
//! of `Lambda_{1,1}` modulo `K` inside `g_k(s)`. Only odd degrees (and the
//! central line in degree zero) are nontrivial.

use std::collections::BTreeMap;

use crate::algebra::{ChevalleyBasis, Element, Gradation, DEFAULT_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Two basis elements of one graded piece `s_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergLevel<S> {
    pub k: i32,
    pub basis: [Element<S>; 2],
}

/// `Lambda_{1,1} = -e0 + e1 + e3 - e21 + e23 + e24` and
/// `Lambda_{1,2} = e1 - e3 + e4 + e20 + e21 + e23`.
pub fn lambda_plus_one<S: Scalar>(b: &ChevalleyBasis<S>) -> HeisenbergLevel<S> {
    let first = -b.e[0].clone() + b.e[1].clone() + b.e[3].clone() - b.e2(1) + b.e2(3) + b.e2(4);
    let second = b.e[1].clone() - b.e[3].clone() + b.e[4].clone() + b.e2(0) + b.e2(1) + b.e2(3);
    HeisenbergLevel {
        k: 1,
        basis: [first, second],
    }
}

/// `Lambda_{-1,1} = (-2f0 + f1 + f3 + f21 - f23 - 2f24) / 2` and
/// `Lambda_{-1,2} = (f1 - f3 + 2f4 - 2f20 - f21 - f23) / 2`.
pub fn lambda_minus_one<S: Scalar>(b: &ChevalleyBasis<S>) -> HeisenbergLevel<S> {
    let half = S::ratio(1, 2);
    let first = (b.f[0].scale_i(-2) + b.f[1].clone() + b.f[3].clone() + b.f2(1) - b.f2(3) - b.f2(4).scale_i(2))
        .scale(&half);
    let second = (b.f[1].clone() - b.f[3].clone() + b.f[4].scale_i(2) - b.f2(0).scale_i(2) - b.f2(1) - b.f2(3))
        .scale(&half);
    HeisenbergLevel {
        k: -1,
        basis: [first, second],
    }
}

/// Coordinates of `x` in the cell basis, keyed by cell; `K` and `d` are
/// dropped.
fn loop_coordinates<S: Scalar>(x: &Element<S>) -> BTreeMap<(i32, u8, u8), S> {
    x.cells().map(|(k, v)| (*k, v.clone())).collect()
}

/// Linear map `g_k(s) -> cells`, `x -> [target, x]` modulo `K`, as a
/// matrix whose columns are indexed by `domain`.
fn bracket_matrix<S: Scalar>(target: &Element<S>, domain: &[Element<S>]) -> Matrix<S> {
    let images: Vec<_> = domain.iter().map(|x| loop_coordinates(&target.bracket(x))).collect();
    let mut rows: Vec<(i32, u8, u8)> = images.iter().flat_map(|m| m.keys().copied()).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut m = Matrix::zeros(rows.len(), domain.len());
    for (c, img) in images.iter().enumerate() {
        for (r, key) in rows.iter().enumerate() {
            if let Some(v) = img.get(key) {
                m[(r, c)] = v.clone();
            }
        }
    }
    m
}

fn combine<S: Scalar>(domain: &[Element<S>], coeffs: &[S]) -> Element<S> {
    domain
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_zero())
        .map(|(x, c)| x.scale(c))
        .sum()
}

/// Basis of `{x in g_k(s) : [Lambda_{1,1}, x] in C K}`, read off the reduced
/// row echelon form of the bracket map.
pub fn centralizer_component<S: Scalar>(
    b: &ChevalleyBasis<S>,
    grad: &Gradation<S>,
    k: i32,
) -> Result<Vec<Element<S>>> {
    centralizer_component_capped(b, grad, k, DEFAULT_DEGREE_CAP)
}

pub fn centralizer_component_capped<S: Scalar>(
    b: &ChevalleyBasis<S>,
    grad: &Gradation<S>,
    k: i32,
    cap: i32,
) -> Result<Vec<Element<S>>> {
    // g_k(s) needs z-degrees up to about |k| / 4 + 1.
    let needed = k.abs() / 4 + 1;
    if needed > cap {
        return Err(Error::DegreeCap { degree: needed, cap });
    }
    let domain = grad.graded_basis(k, needed);
    let lambda = &lambda_plus_one(b).basis[0];
    let m = bracket_matrix(lambda, &domain);
    Ok(m.nullspace().iter().map(|v| combine(&domain, v)).collect())
}

/// Solves `x = sum_i c_i basis_i` exactly; `None` if `x` is outside the span.
pub fn coordinates_in<S: Scalar>(x: &Element<S>, basis: &[Element<S>]) -> Option<Vec<S>> {
    let coords: Vec<BTreeMap<(i32, u8, u8), S>> = basis.iter().map(loop_coordinates).collect();
    let target = loop_coordinates(x);
    let mut rows: Vec<(i32, u8, u8)> = coords
        .iter()
        .flat_map(|m| m.keys().copied())
        .chain(target.keys().copied())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    // Two extra rows for K and d.
    let mut m = Matrix::zeros(rows.len() + 2, basis.len());
    let mut rhs = vec![S::zero(); rows.len() + 2];
    for (c, (img, el)) in coords.iter().zip(basis).enumerate() {
        for (r, key) in rows.iter().enumerate() {
            if let Some(v) = img.get(key) {
                m[(r, c)] = v.clone();
            }
        }
        m[(rows.len(), c)] = el.central().clone();
        m[(rows.len() + 1, c)] = el.derivation().clone();
    }
    for (r, key) in rows.iter().enumerate() {
        if let Some(v) = target.get(key) {
            rhs[r] = v.clone();
        }
    }
    rhs[rows.len()] = x.central().clone();
    rhs[rows.len() + 1] = x.derivation().clone();
    m.solve_affine(&rhs).map(|(sol, _)| sol)
}

/// `G_ij` = coefficient of `K` in `[plus_i, minus_j]`.
pub fn gram<S: Scalar>(plus: &HeisenbergLevel<S>, minus: &HeisenbergLevel<S>) -> [[S; 2]; 2] {
    let entry = |i: usize, j: usize| plus.basis[i].bracket(&minus.basis[j]).central().clone();
    [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
}

/// Bases of `s_k` and `s_{-k}` for odd `k > 0`, normalized so that
/// `[Lambda_{k,i}, Lambda_{-k,j}] = k delta_ij K`.
///
/// The positive level keeps the echelon basis of the centralizer; the
/// negative level is corrected by `k G^{-1}`.
pub fn normalize_level<S: Scalar>(
    b: &ChevalleyBasis<S>,
    grad: &Gradation<S>,
    k: i32,
) -> Result<(HeisenbergLevel<S>, HeisenbergLevel<S>)> {
    assert!(k > 0 && k % 2 == 1, "levels are odd and positive");
    let as_level = |level: i32, v: Vec<Element<S>>| -> Result<HeisenbergLevel<S>> {
        let basis: [Element<S>; 2] = v
            .try_into()
            .map_err(|v: Vec<_>| Error::Defect(format!("s_{level} has dimension {}", v.len())))?;
        Ok(HeisenbergLevel { k: level, basis })
    };
    let plus = as_level(k, centralizer_component(b, grad, k)?)?;
    let minus = as_level(-k, centralizer_component(b, grad, -k)?)?;
    let g = gram(&plus, &minus);
    let gm = Matrix::from_rows(g.iter().map(|r| r.to_vec()).collect());
    let inv = gm.inverse().ok_or(Error::DegeneratePairing { level: k })?;
    let kk = S::from_i64(k as i64);
    let column = |j: usize| -> Element<S> {
        (0..2)
            .map(|l| minus.basis[l].scale(&(inv[(l, j)].clone() * kk.clone())))
            .sum()
    };
    let minus = HeisenbergLevel {
        k: -k,
        basis: [column(0), column(1)],
    };
    Ok((plus, minus))
}

/// Residual of `[Lambda_{k,i}, Lambda_{l,j}] = k delta_ij delta_{k+l,0} K`
/// for one pair of levels, as the largest coefficient.
pub fn pairing_residual<S: Scalar>(a: &HeisenbergLevel<S>, c: &HeisenbergLevel<S>) -> Element<S> {
    let mut worst = Element::zero();
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j && a.k + c.k == 0 {
                Element::central_unit().scale_i(a.k as i64)
            } else {
                Element::zero()
            };
            let r = a.basis[i].bracket(&c.basis[j]) - expected;
            if r.max_abs() > worst.max_abs() || (worst.is_zero() && !r.is_zero()) {
                worst = r;
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_chevalley;
    use crate::scalar::{q, Rational};

    fn setup() -> (ChevalleyBasis<Rational>, Gradation<Rational>) {
        let b = build_chevalley().unwrap();
        let g = Gradation::new(&b).unwrap();
        (b, g)
    }

    #[test]
    fn degree_one_relations() {
        let (b, g) = setup();
        let [l11, l12] = lambda_plus_one(&b).basis;
        assert!(l11.bracket(&l12).is_zero());
        assert!(l11.bracket(&b.k).is_zero());
        assert_eq!(g.degree_s(&l11).keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(g.degree_s(&l12).keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn explicit_pairing_is_identity() {
        let (b, _) = setup();
        let plus = lambda_plus_one(&b);
        let minus = lambda_minus_one(&b);
        assert_eq!(plus.basis[0].bracket(&minus.basis[0]), b.k);
        assert_eq!(plus.basis[1].bracket(&minus.basis[1]), b.k);
        assert!(plus.basis[0].bracket(&minus.basis[1]).is_zero());
        assert!(minus.basis[0].bracket(&minus.basis[1]).is_zero());
        assert_eq!(gram(&plus, &minus), [[q(1, 1), q(0, 1)], [q(0, 1), q(1, 1)]]);
    }

    #[test]
    fn centralizer_dimensions() {
        let (b, g) = setup();
        for (k, dim) in [(-3, 2), (-2, 0), (-1, 2), (0, 1), (1, 2), (2, 0), (3, 2), (4, 0)] {
            assert_eq!(centralizer_component(&b, &g, k).unwrap().len(), dim, "k = {k}");
        }
        assert_eq!(centralizer_component(&b, &g, 0).unwrap(), vec![b.k.clone()]);
    }

    #[test]
    fn explicit_elements_lie_in_centralizers() {
        let (b, g) = setup();
        let c1 = centralizer_component(&b, &g, 1).unwrap();
        let cm1 = centralizer_component(&b, &g, -1).unwrap();
        for x in lambda_plus_one(&b).basis.iter() {
            assert!(coordinates_in(x, &c1).is_some());
        }
        for x in lambda_minus_one(&b).basis.iter() {
            assert!(coordinates_in(x, &cm1).is_some());
        }
        assert!(coordinates_in(&b.e[0], &c1).is_none());
    }

    #[test]
    fn level_three_normalization() {
        let (b, g) = setup();
        let (p3, m3) = normalize_level(&b, &g, 3).unwrap();
        assert!(pairing_residual(&p3, &m3).is_zero());
        assert_eq!(p3.basis[1].bracket(&m3.basis[1]), b.k.scale_i(3));
        let p1 = lambda_plus_one(&b);
        let m1 = lambda_minus_one(&b);
        for (x, y) in [(&p3, &p1), (&p3, &m1), (&m3, &p1), (&m3, &m1), (&p3, &p3)] {
            assert!(pairing_residual(x, y).is_zero());
        }
    }

    #[test]
    fn degree_cap() {
        let (b, g) = setup();
        assert!(matches!(
            centralizer_component_capped(&b, &g, 9, 2),
            Err(Error::DegreeCap { .. })
        ));
    }
}
