//! Immutable simple graphs, copies of a pattern inside a host, and the
//! subgraph search shared by every other module.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex id in `0..n`.
pub type Vertex = usize;

/// Simple undirected graph stored as sorted adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    edge_count: usize,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse to one.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::Precondition(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut edge_count = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Graph {
            adj,
            edge_count: edge_count / 2,
        })
    }

    pub fn complete(k: usize) -> Self {
        let edges = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v)));
        Graph::from_edges(k, edges).expect("valid complete graph")
    }

    /// Path on `k` vertices `0 - 1 - ... - (k-1)`.
    pub fn path(k: usize) -> Self {
        Graph::from_edges(k, (1..k).map(|v| (v - 1, v))).expect("valid path")
    }

    pub fn cycle(k: usize) -> Self {
        assert!(k >= 3, "a cycle needs at least 3 vertices");
        Graph::from_edges(k, (0..k).map(|v| (v, (v + 1) % k))).expect("valid cycle")
    }

    /// Star `K_{1,leaves}` with center 0.
    pub fn star(leaves: usize) -> Self {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("valid star")
    }

    /// Disjoint union; vertices of later graphs are shifted past earlier ones.
    pub fn disjoint_union(parts: &[&Graph]) -> Self {
        let mut edges = Vec::new();
        let mut offset = 0;
        for g in parts {
            edges.extend(g.edges().map(|(u, v)| (u + offset, v + offset)));
            offset += g.n();
        }
        Graph::from_edges(offset, edges).expect("valid union")
    }

    /// Number of vertices, `|G|`.
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.n()
    }

    pub fn is_isolated(&self, v: Vertex) -> bool {
        self.adj[v].is_empty()
    }

    pub fn isolated_vertices(&self) -> Vec<Vertex> {
        self.vertices().filter(|&v| self.is_isolated(v)).collect()
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<Vertex>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in self.vertices() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced on `vertices`; local vertex `i` is `vertices[i]`.
    pub fn induced_subgraph(&self, vertices: &[Vertex]) -> Graph {
        let local: HashMap<Vertex, Vertex> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = vertices.iter().enumerate().flat_map(|(i, &v)| {
            let local = &local;
            self.adj[v]
                .iter()
                .filter_map(move |w| local.get(w).copied())
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        });
        Graph::from_edges(vertices.len(), edges.collect::<Vec<_>>())
            .expect("valid induced subgraph")
    }

    /// Drops isolated vertices. Returns the stripped graph and, for each of
    /// its vertices, the original id.
    pub fn without_isolated(&self) -> (Graph, Vec<Vertex>) {
        let keep: Vec<Vertex> = self.vertices().filter(|&v| !self.is_isolated(v)).collect();
        (self.induced_subgraph(&keep), keep)
    }

    /// Serializes in the `n m` / `u v` line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n(), self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        load_graph(s)
    }
}

/// Parses the graph file format: a header `n m`, then edge lines `u v`.
/// Text after `#` is a comment; blank lines are skipped. Edge lines beyond
/// the declared count are accepted so duplicates can collapse.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if fields.len() != 2 {
            return Err(parse_err(format!(
                "expected two integers, found {:?}",
                line
            )));
        }
        let a: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("not a vertex index: {:?}", fields[0])))?;
        let b: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("not a vertex index: {:?}", fields[1])))?;
        match header {
            None => header = Some((a, b)),
            Some((n, _)) => {
                if a >= n || b >= n {
                    return Err(parse_err(format!(
                        "vertex {} out of range for n = {n}",
                        a.max(b)
                    )));
                }
                if a == b {
                    return Err(parse_err(format!("self-loop at vertex {a}")));
                }
                edges.push((a, b, line_no));
            }
        }
    }
    let (n, m) = header.ok_or(Error::Parse {
        line: 1,
        message: "missing header line \"n m\"".into(),
    })?;
    if edges.len() < m {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!(
                "header declares {m} edges but only {} edge lines follow",
                edges.len()
            ),
        });
    }
    Graph::from_edges(n, edges.into_iter().map(|(u, v, _)| (u, v)))
}

fn edge_key(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Set of undirected edges keyed by normalized vertex pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeSet(FxHashSet<(Vertex, Vertex)>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the edge was already present.
    pub fn insert(&mut self, u: Vertex, v: Vertex) -> bool {
        self.0.insert(edge_key(u, v))
    }

    pub fn contains(&self, u: Vertex, v: Vertex) -> bool {
        self.0.contains(&edge_key(u, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<(Vertex, Vertex)> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = (Vertex, Vertex)>>(iter: T) -> Self {
        EdgeSet(iter.into_iter().map(|(u, v)| edge_key(u, v)).collect())
    }
}

/// A copy of a pattern in a host: `image[x]` is the host vertex playing
/// pattern vertex `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternCopy {
    image: Vec<Vertex>,
}

impl PatternCopy {
    pub fn new(image: Vec<Vertex>) -> Self {
        PatternCopy { image }
    }

    pub fn image(&self) -> &[Vertex] {
        &self.image
    }

    pub fn get(&self, x: Vertex) -> Vertex {
        self.image[x]
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.image.contains(&v)
    }

    /// Pattern vertex mapped to `v`, if any.
    pub fn role_of(&self, v: Vertex) -> Option<Vertex> {
        self.image.iter().position(|&w| w == v)
    }

    /// Host edges used by this copy.
    pub fn host_edges<'a>(
        &'a self,
        pattern: &'a Graph,
    ) -> impl Iterator<Item = (Vertex, Vertex)> + 'a {
        pattern
            .edges()
            .map(move |(a, b)| edge_key(self.image[a], self.image[b]))
    }

    /// Checks injectivity and edge preservation.
    pub fn validate(&self, pattern: &Graph, host: &Graph) -> bool {
        if self.image.len() != pattern.n() {
            return false;
        }
        if self.image.iter().any(|&v| v >= host.n()) {
            return false;
        }
        let distinct: HashSet<Vertex> = self.image.iter().copied().collect();
        if distinct.len() != self.image.len() {
            return false;
        }
        pattern
            .edges()
            .all(|(a, b)| host.has_edge(self.image[a], self.image[b]))
    }
}

/// A collection of copies of one pattern, with the structural flags the
/// reduction stages establish.
#[derive(Clone, Debug, PartialEq)]
pub struct CopySet {
    pattern: Graph,
    copies: Vec<PatternCopy>,
    edge_disjoint: bool,
    uniformly_colored: bool,
}

impl CopySet {
    pub fn new(pattern: Graph) -> Self {
        CopySet {
            pattern,
            copies: Vec::new(),
            edge_disjoint: false,
            uniformly_colored: false,
        }
    }

    pub fn from_copies(pattern: Graph, copies: Vec<PatternCopy>) -> Self {
        CopySet {
            pattern,
            copies,
            edge_disjoint: false,
            uniformly_colored: false,
        }
    }

    pub fn pattern(&self) -> &Graph {
        &self.pattern
    }

    pub fn copies(&self) -> &[PatternCopy] {
        &self.copies
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PatternCopy> {
        self.copies.iter()
    }

    pub fn push(&mut self, copy: PatternCopy) {
        self.copies.push(copy);
    }

    pub fn is_flagged_edge_disjoint(&self) -> bool {
        self.edge_disjoint
    }

    pub fn is_flagged_uniformly_colored(&self) -> bool {
        self.uniformly_colored
    }

    pub fn flag_edge_disjoint(mut self) -> Self {
        self.edge_disjoint = true;
        self
    }

    pub fn flag_uniformly_colored(mut self) -> Self {
        self.uniformly_colored = true;
        self
    }

    /// Subset keeping the given copy indices (in that order) and the flags,
    /// since both properties are inherited by subsets.
    pub fn subset(&self, indices: impl IntoIterator<Item = usize>) -> CopySet {
        CopySet {
            pattern: self.pattern.clone(),
            copies: indices
                .into_iter()
                .map(|i| self.copies[i].clone())
                .collect(),
            edge_disjoint: self.edge_disjoint,
            uniformly_colored: self.uniformly_colored,
        }
    }

    /// True iff no host edge is used by two copies.
    pub fn check_edge_disjoint(&self) -> bool {
        let mut used = EdgeSet::new();
        for c in &self.copies {
            for (u, v) in c.host_edges(&self.pattern) {
                if !used.insert(u, v) {
                    return false;
                }
            }
        }
        true
    }

    /// True iff `h(a) = h'(a')` implies `a = a'` over all pairs of copies.
    pub fn check_uniformly_colored(&self) -> bool {
        self.uniform_roles().is_some()
    }

    /// Host vertex to pattern vertex map when the set is uniformly colored.
    pub fn uniform_roles(&self) -> Option<HashMap<Vertex, Vertex>> {
        let mut role: HashMap<Vertex, Vertex> = HashMap::new();
        for c in &self.copies {
            for (a, &v) in c.image().iter().enumerate() {
                match role.insert(v, a) {
                    Some(prev) if prev != a => return None,
                    _ => {}
                }
            }
        }
        Some(role)
    }

    /// Validates every copy against `host` and every raised flag.
    pub fn validate(&self, host: &Graph) -> bool {
        self.copies.iter().all(|c| c.validate(&self.pattern, host))
            && (!self.edge_disjoint || self.check_edge_disjoint())
            && (!self.uniformly_colored || self.check_uniformly_colored())
    }

    /// Sorted, deduplicated host vertices touched by any copy.
    pub fn vertex_union(&self) -> Vec<Vertex> {
        let mut vs: Vec<Vertex> = self
            .copies
            .iter()
            .flat_map(|c| c.image().iter().copied())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// `G[𝓗]` with its relabeling: local vertex `i` is host vertex `to_host[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyGraph {
    pub graph: Graph,
    pub to_host: Vec<Vertex>,
    to_local: HashMap<Vertex, Vertex>,
}

impl CopyGraph {
    pub fn local(&self, host_vertex: Vertex) -> Option<Vertex> {
        self.to_local.get(&host_vertex).copied()
    }

    pub fn host(&self, local: Vertex) -> Vertex {
        self.to_host[local]
    }
}

/// The subgraph on exactly the vertices and edges used by some copy.
/// Local ids follow ascending host ids.
pub fn induced_edge_subgraph(copies: &CopySet) -> CopyGraph {
    let to_host = copies.vertex_union();
    let to_local: HashMap<Vertex, Vertex> =
        to_host.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(Vertex, Vertex)> = copies
        .iter()
        .flat_map(|c| c.host_edges(copies.pattern()))
        .map(|(u, v)| (to_local[&u], to_local[&v]))
        .collect();
    let graph = Graph::from_edges(to_host.len(), edges).expect("copy edges are valid");
    CopyGraph {
        graph,
        to_host,
        to_local,
    }
}

/// Degeneracy and an elimination order in which every vertex has at most
/// `d` neighbors later in the order (min-degree peeling).
pub fn degeneracy(g: &Graph) -> (usize, Vec<Vertex>) {
    let n = g.n();
    let max_deg = g.max_degree();
    let mut deg: Vec<usize> = g.vertices().map(|v| g.degree(v)).collect();
    let mut buckets: Vec<Vec<Vertex>> = vec![Vec::new(); max_deg + 1];
    for v in g.vertices().rev() {
        buckets[deg[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    let mut low = 0;
    while order.len() < n {
        // entries may be stale; skip those whose degree moved
        let v = loop {
            while buckets[low].is_empty() {
                low += 1;
            }
            let v = buckets[low].pop().expect("nonempty bucket");
            if !removed[v] && deg[v] == low {
                break v;
            }
        };
        d = d.max(low);
        removed[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            if !removed[w] {
                deg[w] -= 1;
                buckets[deg[w]].push(w);
                low = low.min(deg[w]);
            }
        }
    }
    (d, order)
}

/// Deterministic matching order on pattern vertices: each step picks the
/// unplaced vertex with the most placed neighbors (smallest id on ties),
/// opening a new component at its smallest vertex when none is adjacent.
fn matching_order(pattern: &Graph) -> Vec<(Vertex, Option<Vertex>)> {
    let k = pattern.n();
    let mut placed = vec![false; k];
    let mut placed_nbrs = vec![0usize; k];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let next = (0..k)
            .filter(|&x| !placed[x])
            .max_by(|&a, &b| placed_nbrs[a].cmp(&placed_nbrs[b]).then(b.cmp(&a)))
            .expect("unplaced vertex");
        let anchor = pattern.neighbors(next).iter().copied().find(|&y| placed[y]);
        placed[next] = true;
        for &y in pattern.neighbors(next) {
            placed_nbrs[y] += 1;
        }
        order.push((next, anchor));
    }
    order
}

struct Matcher<'a, F> {
    host: &'a Graph,
    pattern: &'a Graph,
    forbidden: &'a EdgeSet,
    admissible: F,
    order: Vec<(Vertex, Option<Vertex>)>,
    image: Vec<Option<Vertex>>,
    used: Vec<Vertex>,
}

impl<F: Fn(Vertex, Vertex) -> bool> Matcher<'_, F> {
    fn fits(&self, x: Vertex, c: Vertex) -> bool {
        if self.used.contains(&c)
            || self.host.degree(c) < self.pattern.degree(x)
            || !(self.admissible)(x, c)
        {
            return false;
        }
        self.pattern
            .neighbors(x)
            .iter()
            .all(|&y| match self.image[y] {
                Some(hy) => self.host.has_edge(c, hy) && !self.forbidden.contains(c, hy),
                None => true,
            })
    }

    fn extend(&mut self, pos: usize, root_floor: Vertex) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let (x, anchor) = self.order[pos];
        let host = self.host;
        match anchor {
            Some(a) => {
                let ha = self.image[a].expect("anchor placed");
                host.neighbors(ha)
                    .iter()
                    .any(|&c| self.place(x, c, pos, root_floor))
            }
            None => {
                let start = if pos == 0 { root_floor } else { 0 };
                (start..host.n()).any(|c| self.place(x, c, pos, root_floor))
            }
        }
    }

    fn place(&mut self, x: Vertex, c: Vertex, pos: usize, root_floor: Vertex) -> bool {
        if !self.fits(x, c) {
            return false;
        }
        self.image[x] = Some(c);
        self.used.push(c);
        if self.extend(pos + 1, root_floor) {
            return true;
        }
        self.used.pop();
        self.image[x] = None;
        false
    }
}

/// Backtracking search used by [`find_copy`]; also returns the host vertex
/// chosen for the first pattern vertex in matching order. Roots below
/// `root_floor` are skipped.
pub(crate) fn find_copy_from<F>(
    host: &Graph,
    pattern: &Graph,
    forbidden: &EdgeSet,
    root_floor: Vertex,
    admissible: F,
) -> Option<(PatternCopy, Vertex)>
where
    F: Fn(Vertex, Vertex) -> bool,
{
    if pattern.n() == 0 {
        return Some((PatternCopy::new(Vec::new()), 0));
    }
    if pattern.n() > host.n() {
        return None;
    }
    let order = matching_order(pattern);
    let root = order[0].0;
    let mut m = Matcher {
        host,
        pattern,
        forbidden,
        admissible,
        order,
        image: vec![None; pattern.n()],
        used: Vec::with_capacity(pattern.n()),
    };
    if m.extend(0, root_floor) {
        let image: Vec<Vertex> = m.image.iter().map(|v| v.expect("complete")).collect();
        let r = image[root];
        Some((PatternCopy::new(image), r))
    } else {
        None
    }
}

/// First copy of `pattern` in `host` using no forbidden edge, trying
/// candidates in ascending vertex order.
pub fn find_copy(host: &Graph, pattern: &Graph, forbidden: &EdgeSet) -> Option<PatternCopy> {
    find_copy_from(host, pattern, forbidden, 0, |_, _| true).map(|(c, _)| c)
}

/// Like [`find_copy`], restricted to placements where
/// `admissible(pattern_vertex, host_vertex)` holds.
pub fn find_copy_where<F>(
    host: &Graph,
    pattern: &Graph,
    forbidden: &EdgeSet,
    admissible: F,
) -> Option<PatternCopy>
where
    F: Fn(Vertex, Vertex) -> bool,
{
    find_copy_from(host, pattern, forbidden, 0, admissible).map(|(c, _)| c)
}

/// Subgraph containment. Isolated pattern vertices are matched by any
/// unused host vertex.
pub fn contains_copy(host: &Graph, pattern: &Graph) -> bool {
    if pattern.n() > host.n() {
        return false;
    }
    let (core, _) = pattern.without_isolated();
    find_copy(host, &core, &EdgeSet::new()).is_some()
}
