use copocert::graphs::{alpha, graph_matrix, random_graph, theta_r, verify_isolated_identity, Graph};
use copocert::rational::int;
use copocert::sdp::SolverOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64, max_n: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let p = rng.gen_range(0.1..0.9);
    random_graph(n, p, &mut rng)
}

fn stable(g: &Graph, set: u32) -> bool {
    g.edges().all(|(i, j)| set & (1 << i) == 0 || set & (1 << j) == 0)
}

fn brute_force_alpha(g: &Graph) -> (usize, u32) {
    (0..1u32 << g.n())
        .filter(|&s| stable(g, s))
        .map(|s| (s.count_ones() as usize, s))
        .max()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alpha_matches_brute_force(seed in any::<u64>()) {
        let g = graph(seed, 12);
        prop_assert_eq!(alpha(&g), brute_force_alpha(&g).0);
    }

    #[test]
    fn maximum_stable_set_is_a_zero_of_the_graph_form(seed in any::<u64>()) {
        let g = graph(seed, 9);
        let (_, set) = brute_force_alpha(&g);
        let x: Vec<_> = (0..g.n()).map(|i| int(((set >> i) & 1) as i64)).collect();
        prop_assert_eq!(graph_matrix(&g).quadratic_form(&x).unwrap(), int(0));
    }

    #[test]
    fn isolated_vertex_identity(seed in any::<u64>()) {
        let g = graph(seed, 7);
        prop_assert!(verify_isolated_identity(&g).unwrap());
    }

    #[test]
    fn dimacs_roundtrip(seed in any::<u64>()) {
        let g = graph(seed, 20);
        prop_assert_eq!(Graph::parse_dimacs(&g.to_dimacs()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn theta_bounds_alpha_and_decreases(seed in any::<u64>()) {
        let g = graph(seed, 6);
        let a = alpha(&g) as f64;
        let opts = SolverOptions::default();
        let t0 = theta_r(&g, 0, &opts).unwrap().value;
        let t1 = theta_r(&g, 1, &opts).unwrap().value;
        prop_assert!(t0 >= a - 1e-5, "theta0 {} alpha {}", t0, a);
        prop_assert!(t1 >= a - 1e-5, "theta1 {} alpha {}", t1, a);
        prop_assert!(t1 <= t0 + 1e-5, "theta1 {} theta0 {}", t1, t0);
    }
}
