use proptest::prelude::*;

use swarm_core::graph::{metrics, random_graph, ring_lattice, watts_strogatz, Graph, TopologySpec};
use swarm_core::rng::sub_stream;

fn small_world_spec() -> impl Strategy<Value = TopologySpec> {
    (4usize..40, 1usize..4, 0.0f64..=1.0, any::<u64>()).prop_filter_map("k below n", |(n, half_k, p, seed)| {
        let k = 2 * half_k;
        (k < n).then(|| TopologySpec::small_world(n, k, p).with_seed(seed))
    })
}

fn arbitrary_graph() -> impl Strategy<Value = Graph> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let edges: Vec<_> = pairs.into_iter().filter(|(u, v)| u != v).collect();
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn is_simple(g: &Graph) -> bool {
    (0..g.n()).all(|u| !g.has_edge(u, u) && g.neighbors(u).all(|v| g.has_edge(v, u)))
        && g.edges().iter().all(|&(u, v)| u < v)
        && (0..g.n()).map(|u| g.degree(u)).sum::<usize>() == 2 * g.edge_count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rewiring_conserves_edges_and_stays_simple(spec in small_world_spec()) {
        let (g, rewired) = watts_strogatz(&spec, &mut sub_stream(spec.seed, &[], "small-world")).unwrap();
        prop_assert_eq!(g.edge_count(), spec.n * spec.k / 2);
        prop_assert!(is_simple(&g));
        for &(u, v) in &rewired {
            prop_assert!(g.has_edge(u, v));
        }
    }

    #[test]
    fn same_seed_same_graph(spec in small_world_spec()) {
        let a = watts_strogatz(&spec, &mut sub_stream(spec.seed, &[], "small-world")).unwrap();
        let b = watts_strogatz(&spec, &mut sub_stream(spec.seed, &[], "small-world")).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn zero_probability_is_the_lattice(n in 5usize..40, half_k in 1usize..3, seed in any::<u64>()) {
        let k = 2 * half_k;
        prop_assume!(k < n);
        let spec = TopologySpec::small_world(n, k, 0.0).with_seed(seed);
        let (g, rewired) = watts_strogatz(&spec, &mut sub_stream(seed, &[], "small-world")).unwrap();
        prop_assert!(rewired.is_empty());
        prop_assert_eq!(g, ring_lattice(n, k).unwrap());
    }

    #[test]
    fn random_graph_has_requested_size(n in 2usize..30, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let m = ((n * (n - 1) / 2) as f64 * frac) as usize;
        let g = random_graph(n, m, &mut sub_stream(seed, &[], "test")).unwrap();
        prop_assert_eq!(g.edge_count(), m);
        prop_assert!(is_simple(&g));
    }

    #[test]
    fn edge_list_round_trips(g in arbitrary_graph()) {
        let text = g.to_edge_list();
        prop_assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn adding_an_edge_never_lengthens_paths(g in arbitrary_graph(), u in 0usize..12, v in 0usize..12) {
        let (u, v) = (u % g.n(), v % g.n());
        prop_assume!(u != v && !g.has_edge(u, v));
        let before = metrics(&g);
        prop_assume!(before.connected);
        let after = metrics(&g.add_edge(u, v).unwrap());
        prop_assert!(after.avg_path_len <= before.avg_path_len);
        prop_assert!(after.connected);
    }

    #[test]
    fn metrics_are_bounded(g in arbitrary_graph()) {
        let m = metrics(&g);
        prop_assert!((0.0..=1.0).contains(&m.clustering));
        prop_assert!(m.avg_path_len == 0.0 || m.avg_path_len >= 1.0);
        prop_assert!(m.avg_path_len <= (g.n() - 1) as f64);
    }
}
