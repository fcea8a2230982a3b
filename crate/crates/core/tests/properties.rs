use proptest::prelude::*;

use d4_painleve::algebra::{build_chevalley, ChevalleyBasis, Element};
use d4_painleve::painleve::{rhs_hamiltonian, rhs_symmetric, singular_distance, Normalization, PviParams, PviState};
use d4_painleve::reduction::{
    m_from_lambda_mu, m_from_rc, residual_linear, residual_norm, solve_coefficients, ReductionCoefficients,
};
use d4_painleve::scalar::{q, Rational};
use d4_painleve::weyl::{apply_word, reflect_params, reflect_state, WeylWord};

fn basis() -> ChevalleyBasis<Rational> {
    build_chevalley().unwrap()
}

fn element(b: &ChevalleyBasis<Rational>, coeffs: &[i64]) -> Element<Rational> {
    let mut pool = b.generators();
    pool.extend(b.coroot.iter().cloned());
    pool.push(b.e[0].bracket(&b.e[2]));
    pool.iter()
        .zip(coeffs)
        .map(|(g, &c)| g.scale_i(c))
        .sum()
}

fn coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, 17)
}

fn small_q() -> impl Strategy<Value = Rational> {
    (-30i64..=30, 1i64..=9).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bracket_is_antisymmetric(a in coeffs(), c in coeffs()) {
        let b = basis();
        let (x, y) = (element(&b, &a), element(&b, &c));
        prop_assert!((x.bracket(&y) + y.bracket(&x)).is_zero());
    }

    #[test]
    fn jacobi_identity(a in coeffs(), c in coeffs(), d in coeffs()) {
        let b = basis();
        let (x, y, z) = (element(&b, &a), element(&b, &c), element(&b, &d));
        let j = x.bracket(&y.bracket(&z)) + y.bracket(&z.bracket(&x)) + z.bracket(&x.bracket(&y));
        prop_assert!(j.is_zero());
    }

    #[test]
    fn form_is_invariant(a in coeffs(), c in coeffs(), d in coeffs()) {
        let b = basis();
        let (x, y, z) = (element(&b, &a), element(&b, &c), element(&b, &d));
        prop_assert_eq!(x.bracket(&y).form(&z), x.form(&y.bracket(&z)));
        prop_assert_eq!(x.form(&y), y.form(&x));
    }

    #[test]
    fn dump_round_trips(a in coeffs()) {
        let x = element(&basis(), &a);
        prop_assert_eq!(Element::parse_dump(&x.dump()).unwrap(), x);
    }

    #[test]
    fn exact_solver_round_trip(
        lambda in small_q(),
        mu in small_q().prop_filter("nonzero", |v| *v != q(0, 1)),
        alpha in prop::array::uniform4(small_q()),
        t in (2i64..40, 1i64..7).prop_map(|(n, d)| q(n, d)),
    ) {
        prop_assume!(singular_distance(d4_painleve::Scalar::to_f64(&t)) > 1e-9);
        let m = m_from_lambda_mu(&lambda, &mu, &alpha, t.clone(), q(1, 1)).unwrap();
        let rc = solve_coefficients(&m).unwrap();
        prop_assert!(residual_linear(&rc).iter().all(|r| *r == q(0, 1)));
        prop_assert_eq!(residual_norm(&rc, &m), [q(0, 1), q(0, 1)]);
        prop_assert_eq!(m_from_rc(&rc, t, q(1, 1)), m.clone());
        let again: ReductionCoefficients<Rational> = solve_coefficients(&m).unwrap();
        prop_assert_eq!(again, rc);
    }

    #[test]
    fn reflections_are_involutions(
        lambda in small_q(),
        mu in small_q(),
        nodes in prop::array::uniform4(small_q()),
        i in 0usize..5,
    ) {
        let st = PviState::new(q(7, 3), lambda, mu);
        let pr = PviParams::new(nodes, Normalization::Intro4);
        let once = match reflect_state(i, &st, &pr) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let pr1 = reflect_params(i, &pr).unwrap();
        if let Ok(twice) = reflect_state(i, &once, &pr1) {
            prop_assert_eq!(twice, st.clone());
        }
        let w = WeylWord(vec![i, i]);
        if let Ok((img, p2)) = apply_word(&w, &st, &pr) {
            prop_assert_eq!(img, st);
            prop_assert_eq!(p2, pr);
        }
    }

    #[test]
    fn symmetric_matches_hamiltonian(
        t in -5.0f64..5.0,
        lambda in -3.0f64..3.0,
        mu in -3.0f64..3.0,
        nodes in prop::array::uniform4(-2.0f64..2.0),
    ) {
        prop_assume!(singular_distance(t) > 1e-2);
        let st = PviState::new(t, lambda, mu);
        let pr = PviParams::new(nodes, Normalization::Intro4);
        let (a, h) = (rhs_symmetric(&st, &pr).unwrap(), rhs_hamiltonian(&st, &pr).unwrap());
        for k in 0..2 {
            prop_assert!((a[k] - h[k]).abs() <= 1e-9 * (1.0 + a[k].abs()));
        }
    }
}
