//! Quick randomized comparisons of the fast routines against the
//! brute-force references, for the `selfcheck` command.

use std::collections::BTreeMap;

use rand::Rng;

use crate::experiments::gen_random_tree;
use crate::graph::{contains_copy, degeneracy, EdgeSet, Graph};
use crate::oracle::{GraphOracle, Seed};
use crate::oracles::{
    all_copies, all_graphs, bfs_output_distribution, degeneracy_brute, min_deletions_to_free,
    total_variation, treedepth_brute,
};
use crate::pipeline::{certify_eps_far, extract_edge_disjoint_copies};
use crate::sparsity::{treedepth_exact, validate_tree_embedding};
use crate::tester::{random_bounded_bfs, test_h_freeness};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("valid pairs")
}

fn check(name: &'static str, cases: usize, failure: Option<String>) -> CheckResult {
    CheckResult {
        name,
        passed: failure.is_none(),
        detail: failure.unwrap_or_else(|| format!("{cases} cases")),
    }
}

fn small_graphs(samples: u64, rng: &mut impl Rng) -> Vec<Graph> {
    let mut gs: Vec<Graph> = (0..=5).flat_map(all_graphs).collect();
    gs.extend((0..samples).map(|_| random_graph(6, 0.5, rng)));
    gs
}

fn treedepth_check(graphs: &[Graph]) -> CheckResult {
    let failure = graphs.iter().find_map(|g| {
        let (td, order) = treedepth_exact(g).ok()?;
        let brute = treedepth_brute(g);
        let valid = validate_tree_embedding(g, &order, td).unwrap_or(false);
        (td != brute || !valid)
            .then(|| format!("graph {:?}: exact {td}, brute {brute}", g.to_text()))
    });
    check("treedepth", graphs.len(), failure)
}

fn degeneracy_check(graphs: &[Graph]) -> CheckResult {
    let failure = graphs.iter().find_map(|g| {
        let (d, _) = degeneracy(g);
        let brute = degeneracy_brute(g);
        (d != brute).then(|| format!("graph {:?}: {d} vs {brute}", g.to_text()))
    });
    check("degeneracy", graphs.len(), failure)
}

fn patterns() -> Vec<Graph> {
    vec![
        Graph::complete(3),
        Graph::cycle(4),
        Graph::path(4),
        Graph::star(3),
        Graph::complete(4),
    ]
}

fn containment_check(samples: u64, rng: &mut impl Rng) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    'outer: for _ in 0..samples {
        let g = random_graph(7, 0.35, rng);
        for h in patterns() {
            cases += 1;
            let brute = !all_copies(&g, &h).is_empty();
            if contains_copy(&g, &h) != brute {
                failure = Some(format!("pattern {:?} in {:?}", h.to_text(), g.to_text()));
                break 'outer;
            }
        }
    }
    check("containment", cases, failure)
}

fn extraction_check(samples: u64, rng: &mut impl Rng) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    'outer: for _ in 0..samples {
        let g = random_graph(7, 0.5, rng);
        for h in patterns() {
            cases += 1;
            let set = match extract_edge_disjoint_copies(&g, &h) {
                Ok(s) => s,
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer;
                }
            };
            let used: EdgeSet = set
                .iter()
                .flat_map(|c| c.host_edges(&h).collect::<Vec<_>>())
                .collect();
            let extendable = all_copies(&g, &h)
                .iter()
                .any(|c| c.host_edges(&h).all(|(u, v)| !used.contains(u, v)));
            if !set.validate(&g) || !set.check_edge_disjoint() || extendable {
                failure = Some(format!(
                    "greedy set not maximal for {:?} in {:?}",
                    h.to_text(),
                    g.to_text()
                ));
                break 'outer;
            }
        }
    }
    check("extraction-maximal", cases, failure)
}

fn certificate_check(samples: u64, rng: &mut impl Rng) -> CheckResult {
    let tri = Graph::complete(3);
    let mut failure = None;
    let mut cases = 0;
    for _ in 0..samples {
        let g = random_graph(8, 0.45, rng);
        let set =
            extract_edge_disjoint_copies(&g, &tri).expect("triangle has no isolated vertices");
        let eps = rng.random_range(0.01..0.5);
        if certify_eps_far(&g, &set, eps) {
            cases += 1;
            let budget = (eps * g.n() as f64).floor() as usize;
            if min_deletions_to_free(&g, &tri, budget).is_some() {
                failure = Some(format!(
                    "certified at eps {eps} but {budget} deletions suffice in {:?}",
                    g.to_text()
                ));
                break;
            }
        }
    }
    check("certificate-sound", cases, failure)
}

fn bfs_distribution_check(samples: u64, seed: Seed) -> CheckResult {
    let runs = samples.max(1) * 500;
    let cases: [(Graph, u32, u32); 3] = [
        (Graph::complete(3), 2, 2),
        (Graph::path(4), 3, 1),
        (Graph::star(3), 2, 2),
    ];
    let mut worst: f64 = 0.0;
    for (i, (g, t, d)) in cases.iter().enumerate() {
        let exact = bfs_output_distribution(g, *t as usize, *d as usize);
        let mut counts: BTreeMap<Vec<(usize, usize)>, u64> = BTreeMap::new();
        let mut o = GraphOracle::new(g, seed.derive(i as u64));
        for _ in 0..runs {
            let ex = random_bounded_bfs(&mut o, *t, *d).expect("nonempty host");
            *counts.entry(ex.edge_key()).or_default() += 1;
        }
        worst = worst.max(total_variation(&exact, &counts, runs));
    }
    let tolerance = 3.0 / (runs as f64).sqrt();
    CheckResult {
        name: "bfs-distribution",
        passed: worst <= tolerance,
        detail: format!(
            "max total variation {worst:.4} over {runs} runs, tolerance {tolerance:.4}"
        ),
    }
}

fn one_sided_check(samples: u64, seed: Seed) -> CheckResult {
    let tri = Graph::complete(3);
    let failure = (0..samples).find_map(|i| {
        let g = gen_random_tree(50, seed.derive(i));
        let mut o = GraphOracle::new(&g, seed.derive(i + samples));
        let v = test_h_freeness(&mut o, &tri, 0.1, 2).ok()?;
        v.is_reject().then(|| format!("tree {i} rejected"))
    });
    check("one-sided", samples as usize, failure)
}

/// Runs every comparison with `samples` random cases each.
pub fn run_all(samples: u64, seed: Seed) -> Vec<CheckResult> {
    let mut rng = seed.rng();
    let graphs = small_graphs(samples, &mut rng);
    vec![
        treedepth_check(&graphs),
        degeneracy_check(&graphs),
        containment_check(samples, &mut rng),
        extraction_check(samples, &mut rng),
        certificate_check(samples, &mut rng),
        bfs_distribution_check(samples, seed),
        one_sided_check(samples, seed),
    ]
}
