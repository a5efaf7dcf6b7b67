//! Brute-force reference implementations for small graphs.
//!
//! Nothing here shares code with the fast paths it checks: copies come from
//! enumerating all injections, treedepth from all elimination orders, and
//! bounded-BFS output probabilities from walking the full probability tree.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{Graph, PatternCopy, Vertex};

/// Every labeled simple graph on `n` vertices (`n <= 7`).
pub fn all_graphs(n: usize) -> impl Iterator<Item = Graph> {
    let pairs: Vec<(Vertex, Vertex)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    assert!(
        pairs.len() < 32,
        "too many vertices for exhaustive enumeration"
    );
    (0u32..1 << pairs.len()).map(move |mask| {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e);
        Graph::from_edges(n, edges).expect("valid pairs")
    })
}

pub fn is_connected(g: &Graph) -> bool {
    g.components().len() <= 1
}

/// All copies of `pattern` in `host`, found by trying every injection.
pub fn all_copies(host: &Graph, pattern: &Graph) -> Vec<PatternCopy> {
    fn rec(host: &Graph, pattern: &Graph, image: &mut Vec<Vertex>, out: &mut Vec<PatternCopy>) {
        if image.len() == pattern.n() {
            if pattern
                .edges()
                .all(|(a, b)| host.has_edge(image[a], image[b]))
            {
                out.push(PatternCopy::new(image.clone()));
            }
            return;
        }
        for v in host.vertices() {
            if !image.contains(&v) {
                image.push(v);
                rec(host, pattern, image, out);
                image.pop();
            }
        }
    }
    let mut out = Vec::new();
    if pattern.n() <= host.n() {
        rec(host, pattern, &mut Vec::new(), &mut out);
    }
    out
}

/// Maximum over vertex subsets of the minimum degree (`n <= 20`).
pub fn degeneracy_brute(g: &Graph) -> usize {
    let n = g.n();
    let mut best = 0;
    for mask in 1u32..1 << n {
        let min = (0..n)
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| {
                g.neighbors(v)
                    .iter()
                    .filter(|&&w| mask >> w & 1 == 1)
                    .count()
            })
            .min()
            .unwrap_or(0);
        best = best.max(min);
    }
    best
}

fn elimination_depth(g: &Graph, set: u32, rank: &[usize]) -> usize {
    // components of g[set]
    let mut rest = set;
    let mut depth = 0;
    while rest != 0 {
        let s = rest.trailing_zeros() as usize;
        let mut comp = 1u32 << s;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if set >> w & 1 == 1 && comp >> w & 1 == 0 {
                    comp |= 1 << w;
                    stack.push(w);
                }
            }
        }
        rest &= !comp;
        let root = (0..g.n())
            .filter(|v| comp >> v & 1 == 1)
            .min_by_key(|&v| rank[v])
            .expect("nonempty component");
        depth = depth.max(1 + elimination_depth(g, comp & !(1 << root), rank));
    }
    depth
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Treedepth as the minimum elimination-forest depth over all vertex
/// orders (`n <= 9`). Counts vertices: a single vertex has treedepth 1.
pub fn treedepth_brute(g: &Graph) -> usize {
    let n = g.n();
    if n == 0 {
        return 0;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = usize::MAX;
    loop {
        let mut rank = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            rank[v] = i;
        }
        best = best.min(elimination_depth(g, full, &rank));
        if !next_permutation(&mut order) {
            return best;
        }
    }
}

/// Fewest edge deletions that make `g` free of `pattern`, if at most
/// `max_deletions` suffice.
pub fn min_deletions_to_free(g: &Graph, pattern: &Graph, max_deletions: usize) -> Option<usize> {
    let copies = all_copies(g, pattern);
    let edges: Vec<(Vertex, Vertex)> = g.edges().collect();
    let index: HashMap<(Vertex, Vertex), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let copy_masks: Vec<u64> = copies
        .iter()
        .map(|c| {
            c.host_edges(pattern)
                .map(|(u, v)| 1u64 << index[&(u.min(v), u.max(v))])
                .fold(0, |a, b| a | b)
        })
        .collect();
    assert!(edges.len() <= 64);
    fn choose(m: usize, k: usize, start: usize, acc: u64, masks: &[u64]) -> bool {
        if k == 0 {
            return masks.iter().all(|&c| c & acc != 0);
        }
        (start..m).any(|i| choose(m, k - 1, i + 1, acc | 1 << i, masks))
    }
    (0..=max_deletions.min(edges.len())).find(|&k| choose(edges.len(), k, 0, 0, &copy_masks))
}

/// Output distribution of the random bounded BFS on a small host: maps
/// each returned edge set (sorted, `u < v`) to its exact probability.
///
/// Walks every start vertex and every sequence of neighbor answers. Within
/// a round, a found vertex joins the next frontier iff it was neither seen
/// before the round nor part of the current frontier.
pub fn bfs_output_distribution(
    g: &Graph,
    depth: usize,
    breadth: usize,
) -> BTreeMap<Vec<(Vertex, Vertex)>, f64> {
    let n = g.n();
    assert!(n <= 32, "host too large for the probability tree");
    let edges: Vec<(Vertex, Vertex)> = g.edges().collect();
    assert!(edges.len() <= 64, "too many host edges");
    let bit: HashMap<(Vertex, Vertex), u64> = edges
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, 1u64 << i))
        .collect();
    let edge_bit = |u: Vertex, w: Vertex| bit[&(u.min(w), u.max(w))];

    // (edges found, seen vertices, current frontier)
    let mut states: HashMap<(u64, u32, u32), f64> = HashMap::new();
    for v in 0..n {
        *states.entry((0, 0, 1 << v)).or_default() += 1.0 / n as f64;
    }
    for _ in 0..depth {
        let mut next_states: HashMap<(u64, u32, u32), f64> = HashMap::new();
        for (&(found, seen, current), &p) in &states {
            let blocked = seen | current;
            // (edges, next frontier) after querying each current vertex
            let mut partial: HashMap<(u64, u32), f64> = HashMap::from([((found, 0u32), p)]);
            for u in (0..n).filter(|&u| current >> u & 1 == 1) {
                let nbrs = g.neighbors(u);
                if nbrs.is_empty() {
                    continue;
                }
                let q = 1.0 / nbrs.len() as f64;
                for _ in 0..breadth {
                    let mut after: HashMap<(u64, u32), f64> = HashMap::new();
                    for (&(e, nx), &pp) in &partial {
                        for &w in nbrs {
                            let nx2 = if blocked >> w & 1 == 1 {
                                nx
                            } else {
                                nx | 1 << w
                            };
                            *after.entry((e | edge_bit(u, w), nx2)).or_default() += pp * q;
                        }
                    }
                    partial = after;
                }
            }
            for ((e, nx), pp) in partial {
                *next_states.entry((e, seen | current, nx)).or_default() += pp;
            }
        }
        states = next_states;
    }
    let mut out: BTreeMap<Vec<(Vertex, Vertex)>, f64> = BTreeMap::new();
    for ((found, _, _), p) in states {
        let set: Vec<(Vertex, Vertex)> = (0..edges.len())
            .filter(|i| found >> i & 1 == 1)
            .map(|i| edges[i])
            .collect();
        *out.entry(set).or_default() += p;
    }
    out
}

/// Exact probability that the returned edge set satisfies `event`.
pub fn bfs_event_probability<F>(g: &Graph, depth: usize, breadth: usize, event: F) -> f64
where
    F: Fn(&[(Vertex, Vertex)]) -> bool,
{
    bfs_output_distribution(g, depth, breadth)
        .iter()
        .filter(|(e, _)| event(e))
        .map(|(_, p)| p)
        .sum()
}

/// Total-variation distance between an exact and an empirical distribution.
pub fn total_variation<K: Ord>(
    exact: &BTreeMap<K, f64>,
    counts: &BTreeMap<K, u64>,
    samples: u64,
) -> f64 {
    let mut tv = 0.0;
    for (k, &p) in exact {
        let emp = counts.get(k).copied().unwrap_or(0) as f64 / samples as f64;
        tv += (p - emp).abs();
    }
    for (k, &c) in counts {
        if !exact.contains_key(k) {
            tv += c as f64 / samples as f64;
        }
    }
    tv / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_counts() {
        assert_eq!(all_graphs(4).count(), 64);
        assert_eq!(all_graphs(3).filter(is_connected).count(), 4);
    }

    #[test]
    fn copies_of_triangle_in_k4() {
        // 4 triangles, 6 automorphisms each
        assert_eq!(
            all_copies(&Graph::complete(4), &Graph::complete(3)).len(),
            24
        );
    }

    #[test]
    fn brute_treedepth_examples() {
        assert_eq!(treedepth_brute(&Graph::path(4)), 3);
        assert_eq!(treedepth_brute(&Graph::complete(4)), 4);
        assert_eq!(treedepth_brute(&Graph::star(4)), 2);
        assert_eq!(treedepth_brute(&Graph::empty(3)), 1);
        assert_eq!(treedepth_brute(&Graph::empty(0)), 0);
    }

    #[test]
    fn brute_degeneracy_examples() {
        assert_eq!(degeneracy_brute(&Graph::complete(5)), 4);
        assert_eq!(degeneracy_brute(&Graph::cycle(6)), 2);
        assert_eq!(degeneracy_brute(&Graph::path(6)), 1);
    }

    #[test]
    fn deletion_examples() {
        let k4 = Graph::complete(4);
        // removing a perfect matching leaves C4
        assert_eq!(min_deletions_to_free(&k4, &Graph::complete(3), 6), Some(2));
        assert_eq!(
            min_deletions_to_free(&Graph::path(4), &Graph::complete(3), 3),
            Some(0)
        );
    }

    #[test]
    fn distribution_sums_to_one() {
        let d = bfs_output_distribution(&Graph::cycle(5), 3, 2);
        let total: f64 = d.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_query_on_path_of_three() {
        // start 0 or 2 always finds its edge; start 1 finds one of two edges
        let d = bfs_output_distribution(&Graph::path(3), 1, 1);
        assert!((d[&vec![(0, 1)]] - 0.5).abs() < 1e-12);
        assert!((d[&vec![(1, 2)]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_start_returns_nothing() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let d = bfs_output_distribution(&g, 2, 2);
        assert!((d[&Vec::new()] - 1.0 / 3.0).abs() < 1e-12);
    }
}
