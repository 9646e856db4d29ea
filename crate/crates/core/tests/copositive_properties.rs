use copocert::copositive::{in_k0, is_copositive, min_level, CopVerdict, K0Verdict, LevelOptions, LevelOutcome};
use copocert::rational::{int, ratio};
use copocert::sdp::SolverOptions;
use copocert::ExactMatrix;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEPTH: u32 = 12;
const BAND: f64 = 1e-4;

fn matrix(rng: &mut ChaCha8Rng, n: usize) -> ExactMatrix {
    ExactMatrix::from_fn(n, |i, j| {
        if i == j {
            ratio(rng.gen_range(0..=4), rng.gen_range(1..=2))
        } else {
            ratio(rng.gen_range(-4..=3), rng.gen_range(1..=3))
        }
    })
}

fn check_witness(m: &ExactMatrix, v: &CopVerdict) -> Result<(), TestCaseError> {
    if let CopVerdict::NotCopositive { witness, value } = v {
        prop_assert!(witness.iter().all(|w| !w.is_negative()));
        prop_assert!(value.is_negative());
        prop_assert_eq!(&m.quadratic_form(witness).unwrap(), value);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn witnesses_are_valid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let m = matrix(&mut rng, n);
        check_witness(&m, &is_copositive(&m, DEPTH))?;
    }

    #[test]
    fn two_by_two_closed_form(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3) {
        // [[a, b], [b, c]] is copositive iff a, c >= 0 and b >= -sqrt(ac).
        let m = ExactMatrix::from_rows(&[vec![int(a), int(b)], vec![int(b), int(c)]]).unwrap();
        let expect = a >= 0 && c >= 0 && (b >= 0 || b * b <= a * c);
        match is_copositive(&m, 20) {
            CopVerdict::Copositive => prop_assert!(expect),
            v @ CopVerdict::NotCopositive { .. } => {
                prop_assert!(!expect);
                check_witness(&m, &v)?;
            }
            // Boundary cases with b^2 = ac are approached but not discharged.
            CopVerdict::Unknown { .. } => prop_assert!(expect && b < 0 && b * b == a * c),
        }
    }

    #[test]
    fn psd_or_nonnegative_is_never_refuted(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let m = if rng.gen_bool(0.5) {
            let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();
            ExactMatrix::from_fn(n, |i, j| int((0..n).map(|k| b[i][k] * b[j][k]).sum()))
        } else {
            ExactMatrix::from_fn(n, |_, _| ratio(rng.gen_range(0..=4), rng.gen_range(1..=3)))
        };
        let refuted = matches!(is_copositive(&m, DEPTH), CopVerdict::NotCopositive { .. });
        prop_assert!(!refuted);
        let in_cone = matches!(in_k0(&m, &SolverOptions::default()).unwrap(), K0Verdict::Yes { .. });
        prop_assert!(in_cone);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k0_decompositions_reconstruct(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let m = matrix(&mut rng, n);
        if let K0Verdict::Yes { p, n: nn, .. } = in_k0(&m, &SolverOptions::default()).unwrap() {
            prop_assert!(p.min_eigenvalue() >= -1e-7);
            let f = m.to_f64();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!(*nn.get(i, j) >= -1e-7);
                    prop_assert!((p.get(i, j) + nn.get(i, j) - f.get(i, j)).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn hierarchy_membership_implies_copositive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let m = matrix(&mut rng, n);
        let res = min_level(&m, 1, &LevelOptions::default()).unwrap();
        let v = is_copositive(&m, DEPTH);
        check_witness(&m, &v)?;
        if let LevelOutcome::Level(r) = res.outcome {
            let refuted = matches!(v, CopVerdict::NotCopositive { .. });
            prop_assert!(!refuted, "member at r={} but refuted", r);
        }
    }
}

/// For n <= 4 the copositive cone is PSD + nonnegative, so the simplicial
/// test and the SDP must agree away from the boundary.
#[test]
fn choi_lam_agreement_for_small_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = SolverOptions::default();
    let (mut compared, mut excluded) = (0, 0);
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let m = matrix(&mut rng, n);
        let k0 = in_k0(&m, &opts).unwrap();
        let cop = is_copositive(&m, DEPTH);
        match (&k0, &cop) {
            (K0Verdict::Yes { margin, .. }, c) if *margin > BAND => {
                assert!(!matches!(c, CopVerdict::NotCopositive { .. }), "{m:?}");
                compared += 1;
            }
            (K0Verdict::No { margin }, c) if *margin < -BAND => {
                assert!(matches!(c, CopVerdict::NotCopositive { .. }), "{m:?}");
                compared += 1;
            }
            _ => excluded += 1,
        }
    }
    assert!(compared >= 80, "compared {compared}, excluded {excluded}");
}

#[test]
fn scaled_horn_family_is_copositive() {
    use copocert::copositive::{horn, scaled_horn};
    assert!(!matches!(is_copositive(&horn(), DEPTH), CopVerdict::NotCopositive { .. }));
    let d = [int(1), int(3), int(1), int(1), int(1)];
    assert!(!matches!(is_copositive(&scaled_horn(&d).unwrap(), DEPTH), CopVerdict::NotCopositive { .. }));
    // Perturbing a zero of the Horn form breaks copositivity.
    let mut h = horn();
    h.set(0, 2, ratio(-11, 10));
    check_and_refute(&h);
}

fn check_and_refute(m: &ExactMatrix) {
    match is_copositive(m, DEPTH) {
        CopVerdict::NotCopositive { witness, value } => {
            assert!(value.is_negative());
            assert_eq!(m.quadratic_form(&witness).unwrap(), value);
        }
        other => panic!("expected a witness, got {other:?}"),
    }
}
