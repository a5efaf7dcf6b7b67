use htest_core::graph::{contains_copy, degeneracy, find_copy, load_graph, EdgeSet, Graph};
use htest_core::oracles::{all_copies, degeneracy_brute, treedepth_brute};
use htest_core::sparsity::{treedepth_exact, validate_p_treedepth_coloring, TreedepthColoring};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..=n * (n - 1) / 2).prop_map(move |pairs| {
            Graph::from_edges(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap()
        })
    })
}

fn pattern_strategy() -> impl Strategy<Value = Graph> {
    graph_strategy(4).prop_filter("no isolated vertices", |g| g.isolated_vertices().is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn find_copy_is_complete_and_valid(
        host in graph_strategy(7),
        pattern in pattern_strategy(),
        forbid in proptest::collection::vec(any::<prop::sample::Index>(), 0..3),
    ) {
        let edges: Vec<_> = host.edges().collect();
        let mut forbidden = EdgeSet::new();
        if !edges.is_empty() {
            for i in &forbid {
                let (u, v) = *i.get(&edges);
                forbidden.insert(u, v);
            }
        }
        let brute = all_copies(&host, &pattern)
            .into_iter()
            .any(|c| c.host_edges(&pattern).all(|(u, v)| !forbidden.contains(u, v)));
        let found = find_copy(&host, &pattern, &forbidden);
        prop_assert_eq!(found.is_some(), brute);
        if let Some(c) = found {
            prop_assert!(c.validate(&pattern, &host));
            prop_assert!(c.host_edges(&pattern).all(|(u, v)| !forbidden.contains(u, v)));
        }
    }

    #[test]
    fn containment_matches_enumeration(host in graph_strategy(7), pattern in pattern_strategy()) {
        prop_assert_eq!(contains_copy(&host, &pattern), !all_copies(&host, &pattern).is_empty());
    }

    #[test]
    fn degeneracy_matches_brute_force(g in graph_strategy(7)) {
        let (d, order) = degeneracy(&g);
        prop_assert_eq!(d, degeneracy_brute(&g));
        let mut pos = vec![0; g.n()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        for v in g.vertices() {
            let later = g.neighbors(v).iter().filter(|&&w| pos[w] > pos[v]).count();
            prop_assert!(later <= d);
        }
    }

    #[test]
    fn text_format_round_trips(g in graph_strategy(9)) {
        prop_assert_eq!(load_graph(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn treedepth_is_monotone_under_induced_subgraphs(
        g in graph_strategy(8),
        keep in proptest::collection::vec(any::<bool>(), 8),
    ) {
        let vs: Vec<usize> = g.vertices().filter(|&v| keep[v]).collect();
        let sub = g.induced_subgraph(&vs);
        prop_assert!(treedepth_exact(&sub).unwrap().0 <= treedepth_exact(&g).unwrap().0);
    }

    #[test]
    fn accepted_colorings_meet_the_definition(
        g in graph_strategy(7),
        colors in proptest::collection::vec(0usize..3, 7),
        p in 1usize..=3,
    ) {
        let c = TreedepthColoring::new(colors[..g.n()].to_vec(), p);
        if validate_p_treedepth_coloring(&g, &c).unwrap() {
            for mask in 1u32..1 << c.num_colors {
                let size = mask.count_ones() as usize;
                if size > p {
                    continue;
                }
                let vs: Vec<usize> = g.vertices().filter(|&v| mask >> c.color[v] & 1 == 1).collect();
                prop_assert!(treedepth_brute(&g.induced_subgraph(&vs)) <= size);
            }
        }
    }
}

#[test]
fn triangle_in_k4_has_a_unique_edge_disjoint_copy_per_run() {
    let k4 = Graph::complete(4);
    let tri = Graph::complete(3);
    let first = find_copy(&k4, &tri, &EdgeSet::new()).unwrap();
    let mut forbidden = EdgeSet::new();
    for (u, v) in first.host_edges(&tri) {
        forbidden.insert(u, v);
    }
    assert!(find_copy(&k4, &tri, &forbidden).is_none());
}
