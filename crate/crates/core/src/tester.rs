//! Random bounded BFS, the repeated-BFS tester for H-freeness, and the
//! finite-family tester built on top of it.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{find_copy, EdgeSet, Graph, PatternCopy, Vertex};
use crate::oracle::{GraphOracle, QueryLog};

/// Output of one bounded BFS: the edge-induced subgraph of everything the
/// queries returned, plus discovery bookkeeping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExploredSubgraph {
    start: Option<Vertex>,
    /// Normalized edges in order of first discovery, with the round that
    /// first returned them.
    edges: Vec<((Vertex, Vertex), u32)>,
    /// Every vertex that entered the frontier, with its discovery step
    /// (the start vertex has step 0).
    discovery: Vec<(Vertex, u32)>,
}

impl ExploredSubgraph {
    pub fn start(&self) -> Option<Vertex> {
        self.start
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.edges.iter().map(|&(e, _)| e)
    }

    /// Edges with the BFS round (1-based) in which they were first returned.
    pub fn edges_with_round(&self) -> &[((Vertex, Vertex), u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of the explored edges, sorted.
    pub fn vertices(&self) -> Vec<Vertex> {
        let mut vs: Vec<Vertex> = self.edges.iter().flat_map(|&((u, v), _)| [u, v]).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn discovery_steps(&self) -> &[(Vertex, u32)] {
        &self.discovery
    }

    pub fn discovery_step(&self, v: Vertex) -> Option<u32> {
        self.discovery
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, s)| s)
    }

    pub fn contains_edge(&self, u: Vertex, v: Vertex) -> bool {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.iter().any(|&(e, _)| e == key)
    }

    /// Sorted edge list, the canonical identity of the returned subgraph.
    pub fn edge_key(&self) -> Vec<(Vertex, Vertex)> {
        let mut es: Vec<_> = self.edges().collect();
        es.sort_unstable();
        es
    }
}

/// Neighbor queries made by one bounded BFS when every frontier is as large
/// as possible: `d * (1 + d + ... + d^(t-1))`.
pub fn bfs_query_budget(depth: u32, breadth: u32) -> u64 {
    let d = breadth as u64;
    let mut frontier = 1u64;
    let mut total = 0u64;
    for _ in 0..depth {
        total += frontier * d;
        frontier *= d;
    }
    total
}

/// One run of the random bounded BFS with depth `t` and breadth `d`.
///
/// Starts at a uniform vertex; in each of `t` rounds every frontier vertex
/// receives exactly `d` neighbor queries. Returned endpoints not yet seen and
/// not in the current frontier form the next frontier.
pub fn random_bounded_bfs(
    oracle: &mut GraphOracle<'_>,
    t: u32,
    d: u32,
) -> Result<ExploredSubgraph> {
    oracle.begin_stream();
    let start = oracle.random_vertex()?;
    let mut out = ExploredSubgraph {
        start: Some(start),
        edges: Vec::new(),
        discovery: vec![(start, 0)],
    };
    let mut edge_set: HashSet<(Vertex, Vertex)> = HashSet::new();
    let mut seen: HashSet<Vertex> = HashSet::new();
    let mut current: Vec<Vertex> = vec![start];
    let mut in_current: HashSet<Vertex> = HashSet::from([start]);
    for round in 1..=t {
        let mut next: Vec<Vertex> = Vec::new();
        let mut in_next: HashSet<Vertex> = HashSet::new();
        for &u in &current {
            for _ in 0..d {
                let Some(w) = oracle.random_neighbor(u)? else {
                    continue;
                };
                if !seen.contains(&w) && !in_current.contains(&w) && in_next.insert(w) {
                    next.push(w);
                    out.discovery.push((w, round));
                }
                let key = if u < w { (u, w) } else { (w, u) };
                if edge_set.insert(key) {
                    out.edges.push((key, round));
                }
            }
            seen.insert(u);
        }
        current = next;
        in_current = in_next;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    /// Copy of the full pattern (isolated vertices included) in host ids;
    /// present iff the decision is reject.
    pub witness: Option<PatternCopy>,
    /// Zero-based iteration that produced the witness. Every iteration runs
    /// regardless, so a run with fewer repetitions rejects iff this index is
    /// below its repetition count.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_iteration: Option<u64>,
    pub log: QueryLog,
}

impl Verdict {
    pub fn is_reject(&self) -> bool {
        self.decision == Decision::Reject
    }
}

/// Looks for a copy of `pattern` whose non-isolated vertices map onto
/// explored edges and whose isolated vertices take the smallest host ids
/// not otherwise used. Needs `host_size >= |pattern|`.
pub fn contains_with_isolated<I>(
    explored: I,
    pattern: &Graph,
    host_size: usize,
) -> Option<PatternCopy>
where
    I: IntoIterator<Item = (Vertex, Vertex)>,
{
    if host_size < pattern.n() {
        return None;
    }
    let (core, core_ids) = pattern.without_isolated();
    let mut image: Vec<Option<Vertex>> = vec![None; pattern.n()];
    if core.n() > 0 {
        let edges: Vec<(Vertex, Vertex)> = explored.into_iter().collect();
        let mut to_host: Vec<Vertex> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        to_host.sort_unstable();
        to_host.dedup();
        let local: HashMap<Vertex, Vertex> =
            to_host.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let small = Graph::from_edges(
            to_host.len(),
            edges.iter().map(|(u, v)| (local[u], local[v])),
        )
        .expect("explored edges are simple");
        let copy = find_copy(&small, &core, &EdgeSet::new())?;
        for (i, &x) in core_ids.iter().enumerate() {
            image[x] = Some(to_host[copy.get(i)]);
        }
    }
    let used: HashSet<Vertex> = image.iter().flatten().copied().collect();
    let mut spare = (0..host_size).filter(|v| !used.contains(v));
    for slot in image.iter_mut().filter(|s| s.is_none()) {
        *slot = Some(
            spare
                .next()
                .expect("host_size >= |pattern| leaves spare vertices"),
        );
    }
    Some(PatternCopy::new(
        image.into_iter().map(|v| v.expect("filled")).collect(),
    ))
}

/// Shape of the tester's per-iteration work for a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TesterShape {
    /// BFS depth, `|H|`.
    pub depth: u32,
    /// BFS breadth, `Δ(H)`.
    pub breadth: u32,
    /// Connected components of `H` after stripping isolated vertices.
    pub components: u32,
}

impl TesterShape {
    pub fn of(pattern: &Graph) -> Self {
        let (core, _) = pattern.without_isolated();
        TesterShape {
            depth: pattern.n() as u32,
            breadth: pattern.max_degree() as u32,
            components: core.components().len() as u32,
        }
    }

    /// Closed-form neighbor-query count for `reps` repetitions.
    pub fn neighbor_budget(&self, reps: u64) -> u64 {
        reps * self.components as u64 * bfs_query_budget(self.depth, self.breadth)
    }

    pub fn vertex_budget(&self, reps: u64) -> u64 {
        reps * self.components as u64
    }
}

fn check_tester_args(eps: f64, reps: u64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidProximity(eps));
    }
    if reps < 1 {
        return Err(Error::InvalidRepetitions);
    }
    Ok(())
}

/// One-sided tester for H-freeness.
///
/// Strips isolated vertices from `pattern`, then `reps` times runs one
/// bounded BFS (depth `|H|`, breadth `Δ(H)`) per component and rejects if
/// the edge-union of some iteration's calls contains a copy. All iterations
/// run and each BFS call is padded to its full query budget, so the query
/// count depends only on `(pattern, reps)`. A pattern larger than the host is
/// accepted without queries.
pub fn test_h_freeness(
    oracle: &mut GraphOracle<'_>,
    pattern: &Graph,
    eps: f64,
    reps: u64,
) -> Result<Verdict> {
    check_tester_args(eps, reps)?;
    let host_size = oracle.vertex_count();
    if pattern.n() > host_size {
        return Ok(Verdict {
            decision: Decision::Accept,
            witness: None,
            witness_iteration: None,
            log: oracle.log().clone(),
        });
    }
    let shape = TesterShape::of(pattern);
    let budget = bfs_query_budget(shape.depth, shape.breadth);
    let mut found: Option<(PatternCopy, u64)> = None;
    for iteration in 0..reps {
        let mut union: Vec<(Vertex, Vertex)> = Vec::new();
        let mut union_set: HashSet<(Vertex, Vertex)> = HashSet::new();
        for _ in 0..shape.components {
            let before = oracle.log().neighbor_queries;
            let explored = random_bounded_bfs(oracle, shape.depth, shape.breadth)?;
            let spent = oracle.log().neighbor_queries - before;
            let start = explored.start().expect("nonempty host");
            oracle.pad(start, budget - spent)?;
            for e in explored.edges() {
                if union_set.insert(e) {
                    union.push(e);
                }
            }
        }
        if found.is_none() {
            if let Some(witness) = contains_with_isolated(union.iter().copied(), pattern, host_size)
            {
                found = Some((witness, iteration));
            }
        }
    }
    let (decision, witness, witness_iteration) = match found {
        Some((w, i)) => (Decision::Reject, Some(w), Some(i)),
        None => (Decision::Accept, None, None),
    };
    Ok(Verdict {
        decision,
        witness,
        witness_iteration,
        log: oracle.log().clone(),
    })
}

/// Tests freeness of every member with proximity `eps / |family|`; rejects
/// with the first rejecting member's witness. Returns the index of that
/// member alongside the verdict.
pub fn test_family_freeness(
    oracle: &mut GraphOracle<'_>,
    family: &[Graph],
    eps: f64,
    reps: u64,
) -> Result<(Verdict, Option<usize>)> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_tester_args(eps, reps)?;
    let sub_eps = eps / family.len() as f64;
    let mut first: Option<(Verdict, usize)> = None;
    for (i, h) in family.iter().enumerate() {
        let v = test_h_freeness(oracle, h, sub_eps, reps)?;
        if first.is_none() && v.is_reject() {
            first = Some((v, i));
        }
    }
    let log = oracle.log().clone();
    Ok(match first {
        Some((mut v, i)) => {
            v.log = log;
            (v, Some(i))
        }
        None => (
            Verdict {
                decision: Decision::Accept,
                witness: None,
                witness_iteration: None,
                log,
            },
            None,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Seed;

    #[test]
    fn budget_closed_form() {
        assert_eq!(bfs_query_budget(5, 2), 62);
        assert_eq!(bfs_query_budget(3, 1), 3);
        assert_eq!(bfs_query_budget(3, 3), 39);
        assert_eq!(bfs_query_budget(4, 0), 0);
    }

    #[test]
    fn isolated_host_explores_nothing() {
        let g = Graph::empty(1);
        let mut o = GraphOracle::new(&g, Seed(1));
        let e = random_bounded_bfs(&mut o, 4, 3).unwrap();
        assert_eq!(e.edge_count(), 0);
        assert!(e.vertices().is_empty());
        // only the start vertex is ever queried
        assert_eq!(o.log().neighbor_queries, 3);
    }

    #[test]
    fn discovery_steps_bounded_by_depth_and_unique() {
        let g = Graph::complete(6);
        for s in 0..200 {
            let mut o = GraphOracle::new(&g, Seed(s));
            let e = random_bounded_bfs(&mut o, 3, 2).unwrap();
            let mut vs: Vec<Vertex> = e.discovery_steps().iter().map(|&(v, _)| v).collect();
            assert!(e.discovery_steps().iter().all(|&(_, step)| step <= 3));
            let n = vs.len();
            vs.sort_unstable();
            vs.dedup();
            assert_eq!(vs.len(), n, "a vertex entered the frontier twice");
            for (u, v) in e.edges() {
                assert!(g.has_edge(u, v));
            }
        }
    }

    #[test]
    fn contains_with_isolated_examples() {
        let p5 = Graph::path(5);
        let path_edges = [(10, 11), (11, 12), (12, 13), (13, 14)];
        let c = contains_with_isolated(path_edges, &p5, 20).unwrap();
        assert!(c.validate(&p5, &Graph::from_edges(20, path_edges).unwrap()));

        let edge_iso = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(contains_with_isolated([(0, 1)], &edge_iso, 2).is_none());
        let c = contains_with_isolated([(0, 1)], &edge_iso, 3).unwrap();
        assert_eq!(c.get(2), 2);
        assert!(c.validate(&edge_iso, &Graph::path(3)));
    }

    #[test]
    fn oversized_pattern_accepts_without_queries() {
        let g = Graph::complete(3);
        let mut o = GraphOracle::new(&g, Seed(0));
        let v = test_h_freeness(&mut o, &Graph::path(5), 0.1, 10).unwrap();
        assert_eq!(v.decision, Decision::Accept);
        assert_eq!(v.log.total(), 0);
    }

    #[test]
    fn argument_errors() {
        let g = Graph::complete(3);
        let mut o = GraphOracle::new(&g, Seed(0));
        let tri = Graph::complete(3);
        assert_eq!(
            test_h_freeness(&mut o, &tri, 0.0, 1),
            Err(Error::InvalidProximity(0.0))
        );
        assert_eq!(
            test_h_freeness(&mut o, &tri, 1.5, 1),
            Err(Error::InvalidProximity(1.5))
        );
        assert_eq!(
            test_h_freeness(&mut o, &tri, 0.5, 0),
            Err(Error::InvalidRepetitions)
        );
        assert_eq!(
            test_family_freeness(&mut o, &[], 0.5, 1).unwrap_err(),
            Error::EmptyFamily
        );
    }

    #[test]
    fn edgeless_pattern_rejects_any_large_enough_host() {
        let g = Graph::path(4);
        let mut o = GraphOracle::new(&g, Seed(0));
        let v = test_h_freeness(&mut o, &Graph::empty(3), 0.5, 2).unwrap();
        assert!(v.is_reject());
        assert_eq!(v.witness.unwrap().image(), &[0, 1, 2]);
        assert_eq!(v.log.total(), 0);
    }

    #[test]
    fn triangle_host_is_rejected_and_witness_validates() {
        let g = Graph::complete(3);
        let tri = Graph::complete(3);
        let mut o = GraphOracle::new(&g, Seed(11));
        let v = test_h_freeness(&mut o, &tri, 0.1, 20).unwrap();
        assert!(v.is_reject());
        assert!(v.witness.unwrap().validate(&tri, &g));
    }
}
