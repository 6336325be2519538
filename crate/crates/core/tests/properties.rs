use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::Zero;
use proptest::prelude::*;

use dirlap::cheeger::{cheeger_connected, cheeger_exact, cheeger_heuristic, cheeger_ratio, Variant, CONNECTED_BUDGET};
use dirlap::generators::{gen_circulation_random, WeightRange};
use dirlap::graph::{delta_b_distances_from, ratio, validate, DirectedWeightedGraph, Rational, VertexSubset};
use dirlap::operators::{apply, assemble, green_residual, inner, OperatorKind};
use dirlap::spectra::{lambda1_symmetric, nu};

fn graph_strategy(max_size: usize) -> impl Strategy<Value = DirectedWeightedGraph> {
    (3..=max_size, any::<u64>(), 0.2f64..0.8, 0usize..6).prop_map(|(size, seed, density, cycles)| {
        gen_circulation_random(size, seed, density, cycles, &WeightRange::new(0.25, 3.0).unwrap()).unwrap()
    })
}

fn with_subset(max_size: usize) -> impl Strategy<Value = (DirectedWeightedGraph, VertexSubset)> {
    graph_strategy(max_size).prop_flat_map(|g| {
        let n = g.len();
        (Just(g), proptest::collection::vec(any::<bool>(), n)).prop_map(|(g, mut mask)| {
            if !mask.iter().any(|&b| b) {
                mask[0] = true;
            }
            (g, VertexSubset::from_mask(mask))
        })
    })
}

fn complex_vec(n: usize) -> impl Strategy<Value = DVector<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

fn embed(g: &DirectedWeightedGraph, omega: &VertexSubset, local: &DVector<Complex64>) -> DVector<Complex64> {
    let mut full = DVector::zeros(g.len());
    for (i, &x) in omega.indices().iter().enumerate() {
        full[x] = local[i];
    }
    full
}

fn local_measure(g: &DirectedWeightedGraph, omega: &VertexSubset) -> Vec<f64> {
    omega.indices().iter().map(|&x| g.measure(x)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beta_sums_agree(g in graph_strategy(30)) {
        let out = (0..g.len()).fold(Rational::zero(), |acc, x| acc + g.beta_out_exact(x));
        let inn = (0..g.len()).fold(Rational::zero(), |acc, x| acc + g.beta_in_exact(x));
        prop_assert_eq!(&out, &inn);
        prop_assert_eq!(out, g.total_weight_exact());
    }

    #[test]
    fn symmetric_perturbation_keeps_gamma(g in graph_strategy(20), bump in 1i64..8) {
        let before = validate(&g, 0.0).unwrap();
        let perturbed = symmetric_bump(&g, bump);
        let after = validate(&perturbed, 0.0).unwrap();
        prop_assert_eq!(before.gamma_constant_exact, after.gamma_constant_exact);
        prop_assert_eq!(after.beta_max_deviation_exact, "0");
    }

    #[test]
    fn delta_b_is_a_metric(g in graph_strategy(20)) {
        let n = g.len();
        let d: Vec<Vec<f64>> = (0..n).map(|x| delta_b_distances_from(&g, &[x])).collect();
        for x in 0..n {
            prop_assert_eq!(d[x][x], 0.0);
            for y in 0..n {
                prop_assert!((d[x][y] - d[y][x]).abs() <= 1e-12 * d[x][y].max(1.0));
                for z in 0..n {
                    prop_assert!(d[x][z] <= d[x][y] + d[y][z] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn rayleigh_quotients_match_in_symmetric_coordinates(
        (g, omega) in with_subset(20),
        seed in any::<u64>(),
    ) {
        let op = assemble(&g, &omega, OperatorKind::Delta).unwrap();
        let m = local_measure(&g, &omega);
        let f = random_local(omega.len(), seed);
        let af = apply(&op, &f).unwrap();
        let q = inner(&af, &f, &m).unwrap() / inner(&f, &f, &m).unwrap();
        let ft = op.to_symmetric_coords(&f);
        let at = op.symmetrized().map(|v| Complex64::new(v, 0.0));
        let qt = (ft.adjoint() * &at * &ft)[(0, 0)] / ft.norm_squared();
        prop_assert!((q - qt).norm() <= 1e-12 * q.norm().max(1.0));
    }

    #[test]
    fn green_positivity_on_subsets((g, omega) in with_subset(25), seed in any::<u64>()) {
        let op = assemble(&g, &omega, OperatorKind::Delta).unwrap();
        let m = local_measure(&g, &omega);
        let f = random_local(omega.len(), seed);
        let re = inner(&apply(&op, &f).unwrap(), &f, &m).unwrap().re;
        prop_assert!(re >= -1e-12);
        let full = embed(&g, &omega, &f);
        let energy: f64 = g.edges().map(|(x, y, a)| a.value * (full[x] - full[y]).norm_sqr()).sum();
        prop_assert!((re - energy / 2.0).abs() <= 1e-10 * energy.max(1.0));
    }

    #[test]
    fn delta_prime_is_the_adjoint((g, omega) in with_subset(25), s1 in any::<u64>(), s2 in any::<u64>()) {
        let d = assemble(&g, &omega, OperatorKind::Delta).unwrap();
        let dp = assemble(&g, &omega, OperatorKind::DeltaPrime).unwrap();
        let m = local_measure(&g, &omega);
        let f = random_local(omega.len(), s1);
        let h = random_local(omega.len(), s2);
        let lhs = inner(&apply(&d, &f).unwrap(), &h, &m).unwrap();
        let rhs = inner(&f, &apply(&dp, &h).unwrap(), &m).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn green_identity_random_pairs(g in graph_strategy(30), f in complex_vec(30), h in complex_vec(30)) {
        let n = g.len();
        let f = f.rows(0, n).into_owned();
        let h = h.rows(0, n).into_owned();
        prop_assert!(green_residual(&g, &f, &h).unwrap().norm() < 1e-10);
    }

    #[test]
    fn hermitian_part_gives_lambda1((g, omega) in with_subset(25)) {
        let s = lambda1_symmetric(&assemble(&g, &omega, OperatorKind::S).unwrap()).unwrap();
        let v = nu(&assemble(&g, &omega, OperatorKind::Delta).unwrap()).unwrap();
        prop_assert!((s - v).abs() <= 1e-10);
    }

    #[test]
    fn dirichlet_bottom_decreases_with_domain((g, omega) in with_subset(20), extra in any::<u64>()) {
        let bigger = VertexSubset::from_indices(
            g.len(),
            omega.indices().iter().copied().chain((0..g.len()).filter(|x| extra >> (x % 64) & 1 == 1)),
        );
        let small = lambda1_symmetric(&assemble(&g, &omega, OperatorKind::S).unwrap()).unwrap();
        let large = lambda1_symmetric(&assemble(&g, &bigger, OperatorKind::S).unwrap()).unwrap();
        prop_assert!(large <= small + 1e-10);
    }

    #[test]
    fn scaling_covariance((g, omega) in with_subset(15), p in 1i64..6, q in 1i64..6) {
        let cb = ratio(p, 2);
        let cm = ratio(q, 3);
        let scaled = g.scaled(&cb, &cm).unwrap();
        let factor = (p as f64 / 2.0) / (q as f64 / 3.0);
        let before = nu(&assemble(&g, &omega, OperatorKind::Delta).unwrap()).unwrap();
        let after = nu(&assemble(&scaled, &omega, OperatorKind::Delta).unwrap()).unwrap();
        prop_assert!((after - factor * before).abs() <= 1e-10 * after.abs().max(1.0));
        let h = cheeger_exact(&g, &omega, Variant::H).unwrap().value;
        let hs = cheeger_exact(&scaled, &omega, Variant::H).unwrap().value;
        prop_assert!((hs - factor * h).abs() <= 1e-10 * hs.abs().max(1.0));
        // β⁺ scales with b, so h̃ does not move.
        let ht = cheeger_exact(&g, &omega, Variant::HTilde).unwrap().value;
        let hts = cheeger_exact(&scaled, &omega, Variant::HTilde).unwrap().value;
        prop_assert!((hts - ht).abs() <= 1e-12 * ht.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cheeger_solvers_agree((g, omega) in with_subset(14), seed in any::<u64>()) {
        for variant in [Variant::H, Variant::HTilde] {
            let exact = cheeger_exact(&g, &omega, variant).unwrap();
            let conn = cheeger_connected(&g, &omega, variant, CONNECTED_BUDGET).unwrap();
            let heur = cheeger_heuristic(&g, &omega, variant, seed).unwrap();
            prop_assert!((exact.value - conn.value).abs() <= 1e-12 * exact.value.max(1.0));
            prop_assert!(heur.value >= exact.value - 1e-12 * exact.value.max(1.0));
            for frag in [&exact, &conn, &heur] {
                let u = frag.witness_subset.as_ref().unwrap();
                prop_assert_eq!(cheeger_ratio(&g, u, variant).unwrap(), frag.value);
            }
        }
    }

    #[test]
    fn h_tilde_below_h_when_mass_is_small((g, omega) in with_subset(12)) {
        let premise = omega.indices().iter().all(|&x| g.measure(x) <= g.beta_out(x));
        if premise {
            let h = cheeger_exact(&g, &omega, Variant::H).unwrap().value;
            let ht = cheeger_exact(&g, &omega, Variant::HTilde).unwrap().value;
            prop_assert!(ht <= h + 1e-12);
        }
    }
}

fn random_local(n: usize, seed: u64) -> DVector<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Adds `bump/4` to both directions of every undirected edge.
fn symmetric_bump(g: &DirectedWeightedGraph, bump: i64) -> DirectedWeightedGraph {
    let mut b = DirectedWeightedGraph::builder();
    for x in 0..g.len() {
        b.vertex(g.id(x).clone(), g.measure_exact(x).clone());
    }
    let mut seen = std::collections::BTreeSet::new();
    for (x, y, _) in g.edges() {
        let key = (x.min(y), x.max(y));
        if seen.insert(key) {
            for (p, q) in [(key.0, key.1), (key.1, key.0)] {
                b.edge(g.id(p).clone(), g.id(q).clone(), g.weight_exact(p, q) + ratio(bump, 4));
            }
        }
    }
    b.build().unwrap()
}
