use copocert::poly::{parse_polynomial, Monomial, Polynomial};
use copocert::rational::{int, ratio};
use copocert::symmat::PsdCheck;
use copocert::{ExactMatrix, ExactPolynomial, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NVARS: usize = 3;

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, q)| ratio(p, q))
}

fn poly() -> impl Strategy<Value = ExactPolynomial> {
    prop::collection::vec((prop::collection::vec(0u32..=2, NVARS), rational()), 0..6).prop_map(|terms| {
        Polynomial::from_terms(NVARS, terms.into_iter().map(|(e, c)| (Monomial::new(e), c))).unwrap()
    })
}

fn point() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(rational(), NVARS)
}

fn positive_point() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1i64..=6, 1i64..=4).prop_map(|(p, q)| ratio(p, q)), NVARS)
}

fn matrix(rng: &mut ChaCha8Rng, n: usize) -> ExactMatrix {
    ExactMatrix::from_fn(n, |_, _| ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3)))
}

/// Random PSD matrices of random rank, so singular cases are common.
fn gram(rng: &mut ChaCha8Rng, n: usize) -> ExactMatrix {
    let rank = rng.gen_range(0..=n);
    let b: Vec<Vec<Rational>> = (0..n)
        .map(|_| (0..rank).map(|_| ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2))).collect())
        .collect();
    ExactMatrix::from_fn(n, |i, j| (0..rank).map(|k| &b[i][k] * &b[j][k]).sum())
}

proptest! {
    #[test]
    fn ring_laws(p in poly(), q in poly(), r in poly()) {
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in poly(), q in poly(), x in point()) {
        let pq = (&p * &q).eval(&x).unwrap();
        prop_assert_eq!(pq, p.eval(&x).unwrap() * q.eval(&x).unwrap());
        let sum = (&p + &q).eval(&x).unwrap();
        prop_assert_eq!(sum, p.eval(&x).unwrap() + q.eval(&x).unwrap());
    }

    #[test]
    fn text_form_roundtrip(p in poly()) {
        let back = parse_polynomial(&p.to_string(), NVARS).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn scale_variables_is_substitution(p in poly(), s in positive_point(), x in point()) {
        // only even polynomials have rational scalings
        let even = Polynomial::from_terms(
            NVARS,
            p.terms().map(|(m, c)| (m.squared(), c.clone())),
        ).unwrap();
        let c: Vec<Rational> = s.iter().map(|v| v * v).collect();
        let scaled = even.scale_variables(&c).unwrap();
        let sx: Vec<Rational> = s.iter().zip(&x).map(|(a, b)| a * b).collect();
        prop_assert_eq!(scaled.eval(&x).unwrap(), even.eval(&sx).unwrap());
    }

    #[test]
    fn quartic_form_of_diagonal_scaling(seed in any::<u64>()) {
        // quartic_form(D M D) = quartic_form(M)(sqrt(d) x) = scale_variables(quartic_form(M), d)
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let m = matrix(&mut rng, n);
        let d: Vec<Rational> = (0..n).map(|_| ratio(rng.gen_range(1..=5), rng.gen_range(1..=4))).collect();
        let lhs = m.diag_scale(&d).unwrap().quartic_form();
        let rhs = m.quartic_form().scale_variables(&d).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn quartic_form_evaluates_quadratic_form_of_squares(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let m = matrix(&mut rng, n);
        let x: Vec<Rational> = (0..n).map(|_| ratio(rng.gen_range(-5..=5), rng.gen_range(1..=3))).collect();
        let sq: Vec<Rational> = x.iter().map(|v| v * v).collect();
        prop_assert_eq!(m.quartic_form().eval(&x).unwrap(), m.quadratic_form(&sq).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_psd_verdicts_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let m = if rng.gen_bool(0.5) { gram(&mut rng, n) } else { matrix(&mut rng, n) };
        match m.psd_check() {
            PsdCheck::Psd(ldl) => {
                prop_assert_eq!(ldl.reconstruct(n), m.clone());
                for _ in 0..1000 {
                    let a: Vec<Rational> = (0..n).map(|_| ratio(rng.gen_range(-9..=9), rng.gen_range(1..=9))).collect();
                    prop_assert!(m.quadratic_form(&a).unwrap() >= int(0));
                }
            }
            PsdCheck::NotPsd { witness, value } => {
                prop_assert!(value < int(0));
                prop_assert_eq!(m.quadratic_form(&witness).unwrap(), value);
            }
        }
    }

    #[test]
    fn matrix_file_roundtrip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let m = matrix(&mut rng, n);
        prop_assert_eq!(ExactMatrix::parse_str(&m.to_file_string()).unwrap(), m);
    }
}
