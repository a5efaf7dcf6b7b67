#![allow(dead_code)]

use htest_core::graph::{Graph, Vertex};
use rand::seq::SliceRandom;
use rand::Rng;

/// Connected graph on `k` vertices: a random tree plus `extra` random edges.
pub fn random_connected(k: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut edges: Vec<(Vertex, Vertex)> = (1..k).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..extra {
        let u = rng.random_range(0..k);
        let v = rng.random_range(0..k);
        if u != v {
            edges.push((u, v));
        }
    }
    Graph::from_edges(k, edges).unwrap()
}

pub fn random_ordering(k: usize, rng: &mut impl Rng) -> Vec<Vertex> {
    let mut order: Vec<Vertex> = (0..k).collect();
    order.shuffle(rng);
    order
}

/// Greedy C4-free graph: random edges are kept only if no 4-cycle appears.
pub fn greedy_c4_free(n: usize, attempts: usize, rng: &mut impl Rng) -> Graph {
    let c4 = Graph::cycle(4);
    let mut edges = Vec::new();
    for _ in 0..attempts {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        edges.push((u, v));
        let g = Graph::from_edges(n, edges.iter().copied()).unwrap();
        if htest_core::graph::contains_copy(&g, &c4) {
            edges.pop();
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// `rows x cols` grid graph.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).unwrap()
}

/// Preferential attachment: each new vertex joins up to `d` distinct earlier
/// vertices picked with probability proportional to degree plus one, so the
/// degeneracy is at most `d` while early vertices become hubs.
pub fn preferential_degenerate(n: usize, d: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    let mut weighted: Vec<Vertex> = vec![0];
    for v in 1..n {
        let mut targets: Vec<Vertex> = Vec::new();
        while targets.len() < d.min(v) {
            let t = weighted[rng.random_range(0..weighted.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            weighted.push(t);
        }
        weighted.push(v);
        weighted.extend(targets.iter().map(|_| v));
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Apex 0 on `m` triangles and `leaves` pendant edges, next to `far`
/// disjoint triangles, with every triangle as a copy.
pub fn apex_instance(m: usize, leaves: usize, far: usize) -> (Graph, htest_core::graph::CopySet) {
    use htest_core::graph::{CopySet, PatternCopy};
    let mut edges = Vec::new();
    let mut copies = Vec::new();
    let mut next = 1;
    for _ in 0..m {
        edges.extend([(0, next), (0, next + 1), (next, next + 1)]);
        copies.push(PatternCopy::new(vec![0, next, next + 1]));
        next += 2;
    }
    for _ in 0..leaves {
        edges.push((0, next));
        next += 1;
    }
    for _ in 0..far {
        edges.extend([(next, next + 1), (next + 1, next + 2), (next, next + 2)]);
        copies.push(PatternCopy::new(vec![next, next + 1, next + 2]));
        next += 3;
    }
    let g = Graph::from_edges(next, edges).unwrap();
    (
        g,
        CopySet::from_copies(Graph::complete(3), copies).flag_edge_disjoint(),
    )
}
