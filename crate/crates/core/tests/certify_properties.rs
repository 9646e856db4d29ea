use copocert::certify::{certify_encoding, CertificateKind, RoundingOptions, SosCertificate, Target};
use copocert::copositive::{horn, horn_scaled_decomposition, lemma_dhd_condition, scaled_horn, unweight_certificate};
use copocert::error::Error;
use copocert::gram::{build_reznick, margin};
use copocert::rational::{int, ratio};
use copocert::sdp::SolverOptions;
use copocert::{ExactMatrix, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: &str = include_str!("data/horn_r1.cert");

fn weights() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1i64..=6, 1i64..=2).prop_map(|(p, q)| ratio(p, q)), 5)
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| ratio(rng.gen_range(-7..=7), rng.gen_range(1..=5))).collect()
}

/// `sum_i w_i q_i(x)^2` evaluated directly.
fn squares_at(cert: &SosCertificate, x: &[Rational]) -> Rational {
    cert.squares
        .iter()
        .map(|s| {
            let v = s.poly.eval(x).unwrap();
            &s.weight * &v * &v
        })
        .fold(Rational::zero(), |a, b| a + b)
}

/// `(sum d_i x_i^2)^r * sum_ij M_ij x_i^2 x_j^2` evaluated directly.
fn reznick_side(m: &ExactMatrix, d: &[Rational], r: u32, x: &[Rational]) -> Rational {
    let n = m.n();
    let mut q = Rational::zero();
    for i in 0..n {
        for j in 0..n {
            q += m.get(i, j) * &x[i] * &x[i] * &x[j] * &x[j];
        }
    }
    let s: Rational = (0..n).map(|i| &d[i] * &x[i] * &x[i]).fold(Rational::zero(), |a, b| a + b);
    num_traits::pow(s, r as usize) * q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn horn_decomposition_is_exact(d in weights(), seed in any::<u64>()) {
        match horn_scaled_decomposition(&d) {
            Ok(cert) => {
                prop_assert!(lemma_dhd_condition(&d).unwrap());
                prop_assert!(cert.verify());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..20 {
                    let x = point(&mut rng, 5);
                    prop_assert_eq!(squares_at(&cert, &x), reznick_side(&horn(), &d, 1, &x));
                }
                // The unweighted form certifies D^-1 H D^-1 at level 1.
                let plain = unweight_certificate(&cert).unwrap();
                prop_assert!(plain.verify());
                prop_assert_eq!(&plain.target, &Target::Matrix(scaled_horn(&d).unwrap()));
                let ones = vec![int(1); 5];
                for _ in 0..20 {
                    let x = point(&mut rng, 5);
                    prop_assert_eq!(squares_at(&plain, &x), reznick_side(&scaled_horn(&d).unwrap(), &ones, 1, &x));
                }
            }
            Err(Error::ConditionViolated(i)) => {
                prop_assert!(!lemma_dhd_condition(&d).unwrap());
                prop_assert!(&d[(i + 4) % 5] + &d[(i + 1) % 5] < d[i]);
            }
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn serialization_roundtrip_preserves_verdict(d in weights(), tweak in 0usize..10) {
        prop_assume!(lemma_dhd_condition(&d).unwrap());
        let cert = horn_scaled_decomposition(&d).unwrap();
        let back = SosCertificate::deserialize(&cert.serialize()).unwrap();
        prop_assert_eq!(&back, &cert);
        prop_assert_eq!(back.verify(), cert.verify());

        let mut bad = cert.clone();
        let k = tweak % bad.squares.len();
        bad.squares[k].weight += ratio(1, 7);
        prop_assert!(!bad.verify());
        let bad = SosCertificate::deserialize(&bad.serialize()).unwrap();
        prop_assert!(!bad.verify());
    }

    #[test]
    fn interior_psd_plus_nonnegative_rounds_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect()).collect();
        let m = ExactMatrix::from_fn(n, |i, j| {
            let p: i64 = (0..n).map(|k| b[i][k] * b[j][k]).sum::<i64>() + i64::from(i == j);
            int(p) + ratio(rng.gen_range(0..=3), rng.gen_range(1..=4))
        });
        let enc = build_reznick(&m, 0);
        let (mg, sol) = margin(&enc, &SolverOptions::default()).unwrap();
        prop_assert!(mg > 1e-6, "margin {}", mg);
        let cert = certify_encoding(&enc, &sol, &RoundingOptions::default()).unwrap();
        prop_assert!(cert.verify());
        prop_assert_eq!(&cert.target, &Target::Matrix(m.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let ones = vec![int(1); n];
        for _ in 0..20 {
            let x = point(&mut rng, n);
            prop_assert_eq!(squares_at(&cert, &x), reznick_side(&m, &ones, 0, &x));
        }
    }
}

#[test]
fn golden_horn_certificate() {
    let cert = SosCertificate::deserialize(GOLDEN).unwrap();
    assert!(cert.verify());
    assert_eq!(cert.kind, CertificateKind::Reznick { r: 1, weights: Some(vec![int(1); 5]) });
    assert_eq!(cert.squares.len(), 10);
    let fresh = horn_scaled_decomposition(&[int(1), int(1), int(1), int(1), int(1)]).unwrap();
    assert_eq!(fresh.serialize(), GOLDEN);
}

#[test]
fn golden_certificate_with_edited_target_fails() {
    let edited = GOLDEN.replacen("1 1 -1 -1 1", "1 1 -1 -1 2", 1);
    let cert = SosCertificate::deserialize(&edited);
    // Either the edit breaks symmetry (parse error) or the identity.
    if let Ok(c) = cert {
        assert!(!c.verify());
    }
    let edited = GOLDEN.replacen("r 1", "r 2", 1);
    assert!(!SosCertificate::deserialize(&edited).unwrap().verify());
}

#[test]
fn horn_level_one_rounds_from_the_solver() {
    let enc = build_reznick(&horn(), 1);
    let opts = SolverOptions {
        tol: 1e-10,
        ..SolverOptions::default()
    };
    let (_, sol) = margin(&enc, &opts).unwrap();
    let cert = certify_encoding(&enc, &sol, &RoundingOptions::default()).unwrap();
    assert!(cert.verify());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x = point(&mut rng, 5);
        assert_eq!(squares_at(&cert, &x), reznick_side(&horn(), &vec![int(1); 5], 1, &x));
    }
}
