//! Tree orders, exact treedepth, and p-treedepth colorings.
//!
//! Depth is counted in vertices along a root-to-leaf chain: a root has
//! level 0 and a tree order's depth is its maximal level plus one, so
//! `td(K1) = 1` and `td(K2) = 2`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::oracle::Seed;

/// Default size cap (per connected component) for exact treedepth.
pub const EXACT_TREEDEPTH_CAP: usize = 20;

/// A rooted-forest order: `parent[v]` is the immediate predecessor of `v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeOrder {
    parent: Vec<Option<Vertex>>,
    level: Vec<usize>,
}

impl TreeOrder {
    /// Builds the order from parent links, computing levels. Fails on
    /// cycles or out-of-range parents.
    pub fn from_parents(parent: Vec<Option<Vertex>>) -> Result<Self> {
        let n = parent.len();
        let mut level: Vec<Option<usize>> = vec![None; n];
        for start in 0..n {
            let mut chain = Vec::new();
            let mut v = start;
            loop {
                if level[v].is_some() {
                    break;
                }
                if chain.len() > n {
                    return Err(Error::Precondition("parent links contain a cycle".into()));
                }
                chain.push(v);
                match parent[v] {
                    None => break,
                    Some(p) if p >= n => return Err(Error::VertexOutOfRange { vertex: p, n }),
                    Some(p) => v = p,
                }
            }
            while let Some(u) = chain.pop() {
                let l = match parent[u] {
                    None => 0,
                    Some(p) => {
                        level[p].ok_or_else(|| {
                            Error::Precondition("parent links contain a cycle".into())
                        })? + 1
                    }
                };
                level[u] = Some(l);
            }
        }
        Ok(TreeOrder {
            parent,
            level: level.into_iter().map(|l| l.expect("assigned")).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v]
    }

    pub fn level(&self, v: Vertex) -> usize {
        self.level[v]
    }

    pub fn parents(&self) -> &[Option<Vertex>] {
        &self.parent
    }

    pub fn levels(&self) -> &[usize] {
        &self.level
    }

    /// Maximal level plus one; zero for an empty order.
    pub fn depth(&self) -> usize {
        self.level.iter().map(|&l| l + 1).max().unwrap_or(0)
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        std::iter::successors(self.parent[v], move |&u| self.parent[u])
    }

    /// `a <=_T v`.
    pub fn is_ancestor_or_equal(&self, a: Vertex, v: Vertex) -> bool {
        if self.level[a] > self.level[v] {
            return false;
        }
        let mut x = v;
        while self.level[x] > self.level[a] {
            x = self.parent[x].expect("non-root above level 0");
        }
        x == a
    }

    pub fn comparable(&self, u: Vertex, v: Vertex) -> bool {
        self.is_ancestor_or_equal(u, v) || self.is_ancestor_or_equal(v, u)
    }

    /// Restriction to `keep` (given as distinct vertices); local vertex `i`
    /// is `keep[i]` and its parent is its nearest kept ancestor.
    pub fn restrict(&self, keep: &[Vertex]) -> TreeOrder {
        let local: HashMap<Vertex, Vertex> =
            keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let parent = keep
            .iter()
            .map(|&v| self.ancestors(v).find_map(|a| local.get(&a).copied()))
            .collect();
        TreeOrder::from_parents(parent).expect("restriction of a forest is a forest")
    }

    fn consistent(&self) -> bool {
        self.parent.iter().enumerate().all(|(v, p)| match p {
            None => self.level[v] == 0,
            Some(p) => *p < self.len() && self.level[v] == self.level[*p] + 1,
        })
    }
}

/// True iff `t` is a forest order on `V(g)` in which every edge joins an
/// ancestor-descendant pair and the depth is at most `depth_bound`.
pub fn validate_tree_embedding(g: &Graph, t: &TreeOrder, depth_bound: usize) -> Result<bool> {
    if t.len() != g.n() {
        return Err(Error::VertexSetMismatch {
            expected: g.n(),
            got: t.len(),
        });
    }
    Ok(t.consistent() && t.depth() <= depth_bound && g.edges().all(|(u, v)| t.comparable(u, v)))
}

fn components_of_mask(adj: &[u32], mask: u32) -> Vec<u32> {
    let mut rest = mask;
    let mut out = Vec::new();
    while rest != 0 {
        let seed = rest & rest.wrapping_neg();
        let mut comp = seed;
        let mut frontier = seed;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[v] & mask & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        rest &= !comp;
        out.push(comp);
    }
    out
}

/// Memoized `td(S) = 1 + min_v td(S - v)` over connected vertex subsets,
/// with `td` of a disconnected set the maximum over its components.
struct ExactTreedepth {
    adj: Vec<u32>,
    memo: HashMap<u32, (u8, u8)>,
}

impl ExactTreedepth {
    fn new(g: &Graph) -> Self {
        let adj = g
            .vertices()
            .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
            .collect();
        ExactTreedepth {
            adj,
            memo: HashMap::new(),
        }
    }

    fn connected(&mut self, s: u32) -> u8 {
        let size = s.count_ones() as u8;
        if size <= 1 {
            if size == 1 {
                self.memo.insert(s, (1, s.trailing_zeros() as u8));
            }
            return size;
        }
        if let Some(&(d, _)) = self.memo.get(&s) {
            return d;
        }
        let is_clique = (0..32)
            .filter(|&v| s >> v & 1 == 1)
            .all(|v| (self.adj[v] & s) == s & !(1 << v));
        if is_clique {
            self.memo.insert(s, (size, s.trailing_zeros() as u8));
            return size;
        }
        let mut best = size;
        let mut best_root = s.trailing_zeros() as u8;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros();
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let mut worst = 0u8;
            for c in components_of_mask(&self.adj, rest) {
                // 1 + worst >= best cannot improve
                if worst + 1 >= best {
                    break;
                }
                worst = worst.max(self.connected(c));
            }
            if worst + 1 < best {
                best = worst + 1;
                best_root = v as u8;
            }
        }
        self.memo.insert(s, (best, best_root));
        best
    }

    fn build(&mut self, s: u32, parent_of_root: Option<Vertex>, parent: &mut [Option<Vertex>]) {
        for c in components_of_mask(&self.adj, s) {
            self.connected(c);
            let root = self.memo[&c].1 as Vertex;
            parent[root] = parent_of_root;
            self.build(c & !(1 << root), Some(root), parent);
        }
    }
}

/// Exact treedepth with a witness embedding of that depth. Every connected
/// component must have at most [`EXACT_TREEDEPTH_CAP`] vertices.
pub fn treedepth_exact(g: &Graph) -> Result<(usize, TreeOrder)> {
    treedepth_exact_with_cap(g, EXACT_TREEDEPTH_CAP)
}

pub fn treedepth_exact_with_cap(g: &Graph, cap: usize) -> Result<(usize, TreeOrder)> {
    let cap = cap.min(31);
    let mut parent: Vec<Option<Vertex>> = vec![None; g.n()];
    let mut depth = 0;
    for comp in g.components() {
        if comp.len() > cap {
            return Err(Error::TreedepthCapExceeded {
                size: comp.len(),
                cap,
            });
        }
        let sub = g.induced_subgraph(&comp);
        let mut solver = ExactTreedepth::new(&sub);
        let full = if comp.len() == 32 {
            u32::MAX
        } else {
            (1u32 << comp.len()) - 1
        };
        depth = depth.max(solver.connected(full) as usize);
        let mut local_parent = vec![None; comp.len()];
        solver.build(full, None, &mut local_parent);
        for (i, p) in local_parent.into_iter().enumerate() {
            parent[comp[i]] = p.map(|q| comp[q]);
        }
    }
    let order = TreeOrder::from_parents(parent)?;
    debug_assert_eq!(order.depth(), depth);
    Ok((depth, order))
}

/// Valid but not necessarily optimal embedding: each component is rooted at
/// its highest-degree vertex (smallest id on ties) and the rest recursed.
pub fn treedepth_heuristic(g: &Graph) -> TreeOrder {
    let n = g.n();
    let mut parent: Vec<Option<Vertex>> = vec![None; n];
    let mut removed = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    // (vertex set of a connected piece, parent for its root)
    let mut stack: Vec<(Vec<Vertex>, Option<Vertex>)> = Vec::new();
    for comp in g.components() {
        stack.push((comp, None));
    }
    while let Some((piece, above)) = stack.pop() {
        stamp += 1;
        for &v in &piece {
            mark[v] = stamp;
        }
        let root = *piece
            .iter()
            .max_by(|&&a, &&b| {
                let da = g.neighbors(a).iter().filter(|&&w| mark[w] == stamp).count();
                let db = g.neighbors(b).iter().filter(|&&w| mark[w] == stamp).count();
                da.cmp(&db).then(b.cmp(&a))
            })
            .expect("nonempty piece");
        parent[root] = above;
        removed[root] = true;
        // split the remainder into connected pieces
        stamp += 1;
        for &v in &piece {
            if removed[v] || mark[v] == stamp {
                continue;
            }
            let mut comp = vec![v];
            mark[v] = stamp;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &w in g.neighbors(u) {
                    if !removed[w] && mark[w] == stamp - 1 {
                        mark[w] = stamp;
                        comp.push(w);
                    }
                }
            }
            stack.push((comp, Some(root)));
        }
    }
    TreeOrder::from_parents(parent).expect("heuristic builds a forest")
}

/// Exact embedding when every component fits under the cap, otherwise the
/// heuristic one. The flag reports which was used.
pub fn tree_embedding(g: &Graph) -> (TreeOrder, bool) {
    match treedepth_exact(g) {
        Ok((_, t)) => (t, true),
        Err(_) => (treedepth_heuristic(g), false),
    }
}

/// Treedepth of `g` is at most `bound`? Uses cheap upper bounds first and
/// exact computation per component only when needed.
pub(crate) fn treedepth_at_most(g: &Graph, bound: usize) -> Result<bool> {
    for comp in g.components() {
        if comp.len() <= bound {
            continue;
        }
        let sub = g.induced_subgraph(&comp);
        if treedepth_heuristic(&sub).depth() <= bound {
            continue;
        }
        let (d, _) = treedepth_exact(&sub)?;
        if d > bound {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreedepthColoring {
    pub color: Vec<usize>,
    pub p: usize,
    pub num_colors: usize,
}

impl TreedepthColoring {
    pub fn new(color: Vec<usize>, p: usize) -> Self {
        let num_colors = color.iter().map(|&c| c + 1).max().unwrap_or(0);
        TreedepthColoring {
            color,
            p,
            num_colors,
        }
    }

    fn class_union(&self, g: &Graph, colors: &[usize]) -> Graph {
        let vs: Vec<Vertex> = g
            .vertices()
            .filter(|&v| colors.contains(&self.color[v]))
            .collect();
        g.induced_subgraph(&vs)
    }
}

/// Calls `f` on every subset of `0..universe` of size `1..=max_size`.
fn for_each_subset(
    universe: usize,
    max_size: usize,
    f: &mut dyn FnMut(&[usize]) -> Result<bool>,
) -> Result<bool> {
    fn rec(
        start: usize,
        universe: usize,
        max_size: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<bool>,
    ) -> Result<bool> {
        for c in start..universe {
            cur.push(c);
            if !f(cur)? {
                return Ok(false);
            }
            if cur.len() < max_size && !rec(c + 1, universe, max_size, cur, f)? {
                return Ok(false);
            }
            cur.pop();
        }
        Ok(true)
    }
    if max_size == 0 {
        return Ok(true);
    }
    rec(0, universe, max_size, &mut Vec::new(), f)
}

/// Exact check that every union of at most `p` color classes, using `i`
/// colors, induces a graph of treedepth at most `i`.
pub fn validate_p_treedepth_coloring(g: &Graph, c: &TreedepthColoring) -> Result<bool> {
    if c.color.len() != g.n() {
        return Err(Error::InvalidColoring(format!(
            "coloring covers {} vertices, graph has {}",
            c.color.len(),
            g.n()
        )));
    }
    if let Some(&bad) = c.color.iter().find(|&&x| x >= c.num_colors) {
        return Err(Error::InvalidColoring(format!(
            "color {bad} outside 0..{}",
            c.num_colors
        )));
    }
    for_each_subset(c.num_colors, c.p, &mut |s| {
        treedepth_at_most(&c.class_union(g, s), s.len())
    })
}

/// Randomized greedy search for a p-treedepth coloring with at most
/// `color_budget` colors. Each restart colors vertices in a fresh random
/// order, giving each the smallest color that keeps every affected class
/// union within its treedepth bound. Results are validated exactly; `None`
/// means the search failed, not that no coloring exists.
pub fn p_treedepth_coloring(
    g: &Graph,
    p: usize,
    color_budget: usize,
    restarts: usize,
    seed: Seed,
) -> Option<TreedepthColoring> {
    if g.n() == 0 {
        return Some(TreedepthColoring::new(Vec::new(), p));
    }
    if p == 0 || color_budget == 0 {
        return None;
    }
    for r in 0..restarts.max(1) {
        let mut rng = seed.derive(r as u64).rng();
        let mut order: Vec<Vertex> = g.vertices().collect();
        if r > 0 {
            order.shuffle(&mut rng);
        }
        let mut color: Vec<Option<usize>> = vec![None; g.n()];
        let mut ok = true;
        for &v in &order {
            let chosen = (0..color_budget).find(|&c| {
                color[v] = Some(c);
                let fits = placement_fits(g, &color, v, c, p, color_budget);
                color[v] = None;
                fits
            });
            match chosen {
                Some(c) => color[v] = Some(c),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let coloring =
            TreedepthColoring::new(color.into_iter().map(|c| c.expect("colored")).collect(), p);
        if matches!(validate_p_treedepth_coloring(g, &coloring), Ok(true)) {
            return Some(coloring);
        }
    }
    None
}

/// Checks every color set `S` containing `c` (|S| <= p): the component of `v`
/// among vertices colored in `S` must have treedepth at most `|S|`.
fn placement_fits(
    g: &Graph,
    color: &[Option<usize>],
    v: Vertex,
    c: usize,
    p: usize,
    budget: usize,
) -> bool {
    let others: Vec<usize> = (0..budget).filter(|&x| x != c).collect();
    let mut fits = true;
    let _ = for_each_subset(others.len(), p - 1, &mut |idx| {
        let set: Vec<usize> = std::iter::once(c)
            .chain(idx.iter().map(|&i| others[i]))
            .collect();
        fits = component_fits(g, color, v, &set);
        Ok(fits)
    });
    fits && component_fits(g, color, v, &[c])
}

fn component_fits(g: &Graph, color: &[Option<usize>], v: Vertex, set: &[usize]) -> bool {
    let inside = |x: Vertex| color[x].is_some_and(|cx| set.contains(&cx));
    let mut comp = vec![v];
    let mut seen = std::collections::HashSet::from([v]);
    let mut i = 0;
    while i < comp.len() {
        let u = comp[i];
        i += 1;
        for &w in g.neighbors(u) {
            if inside(w) && seen.insert(w) {
                comp.push(w);
            }
        }
    }
    if comp.len() <= set.len() {
        return true;
    }
    matches!(
        treedepth_at_most(&g.induced_subgraph(&comp), set.len()),
        Ok(true)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_examples() {
        assert_eq!(treedepth_exact(&Graph::complete(5)).unwrap().0, 5);
        assert_eq!(treedepth_exact(&Graph::empty(4)).unwrap().0, 1);
        assert_eq!(treedepth_exact(&Graph::empty(0)).unwrap().0, 0);
        assert_eq!(treedepth_exact(&Graph::path(4)).unwrap().0, 3);
        assert_eq!(treedepth_exact(&Graph::path(7)).unwrap().0, 3);
        assert_eq!(treedepth_exact(&Graph::star(6)).unwrap().0, 2);
        assert_eq!(treedepth_exact(&Graph::cycle(6)).unwrap().0, 4);
    }

    #[test]
    fn exact_witness_is_valid() {
        for g in [
            Graph::path(9),
            Graph::cycle(7),
            Graph::complete(4),
            Graph::star(5),
        ] {
            let (d, t) = treedepth_exact(&g).unwrap();
            assert!(validate_tree_embedding(&g, &t, d).unwrap());
            assert!(!validate_tree_embedding(&g, &t, d - 1).unwrap());
        }
    }

    #[test]
    fn cap_is_enforced_per_component() {
        let big = Graph::path(25);
        assert!(matches!(
            treedepth_exact(&big),
            Err(Error::TreedepthCapExceeded { size: 25, .. })
        ));
        let many_small =
            Graph::disjoint_union(&[&Graph::path(10), &Graph::path(10), &Graph::path(10)]);
        assert_eq!(treedepth_exact(&many_small).unwrap().0, 4);
    }

    #[test]
    fn embedding_validation_examples() {
        let p3 = Graph::path(3);
        let chain = TreeOrder::from_parents(vec![None, Some(0), Some(1)]).unwrap();
        assert!(validate_tree_embedding(&p3, &chain, 3).unwrap());
        assert!(!validate_tree_embedding(&p3, &chain, 2).unwrap());
        let tri = Graph::complete(3);
        let star = TreeOrder::from_parents(vec![None, Some(0), Some(0)]).unwrap();
        assert!(!validate_tree_embedding(&tri, &star, 3).unwrap());
        assert!(matches!(
            validate_tree_embedding(&Graph::path(4), &chain, 4),
            Err(Error::VertexSetMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn cyclic_parents_rejected() {
        assert!(TreeOrder::from_parents(vec![Some(1), Some(0)]).is_err());
        assert!(TreeOrder::from_parents(vec![Some(0)]).is_err());
    }

    #[test]
    fn restriction_takes_nearest_kept_ancestor() {
        let chain = TreeOrder::from_parents(vec![None, Some(0), Some(1), Some(2)]).unwrap();
        let r = chain.restrict(&[3, 0]);
        assert_eq!(r.parent(0), Some(1));
        assert_eq!(r.parent(1), None);
        assert_eq!(r.depth(), 2);
    }

    #[test]
    fn heuristic_is_valid() {
        let g = Graph::disjoint_union(&[&Graph::path(30), &Graph::star(40), &Graph::cycle(9)]);
        let t = treedepth_heuristic(&g);
        assert!(validate_tree_embedding(&g, &t, t.depth()).unwrap());
        assert_eq!(treedepth_heuristic(&Graph::star(50)).depth(), 2);
    }

    #[test]
    fn coloring_validation_examples() {
        let path = Graph::path(3);
        assert!(
            !validate_p_treedepth_coloring(&path, &TreedepthColoring::new(vec![0, 0, 0], 1))
                .unwrap()
        );
        assert!(validate_p_treedepth_coloring(
            &Graph::empty(4),
            &TreedepthColoring::new(vec![0; 4], 1)
        )
        .unwrap());
        let k3 = Graph::complete(3);
        assert!(
            !validate_p_treedepth_coloring(&k3, &TreedepthColoring::new(vec![0, 1, 1], 2)).unwrap()
        );
        let k5 = Graph::complete(5);
        assert!(
            validate_p_treedepth_coloring(&k5, &TreedepthColoring::new((0..5).collect(), 3))
                .unwrap()
        );
        assert!(validate_p_treedepth_coloring(
            &Graph::path(2),
            &TreedepthColoring::new(vec![0], 1)
        )
        .is_err());
    }

    #[test]
    fn greedy_coloring_examples() {
        let c = p_treedepth_coloring(&Graph::empty(6), 3, 4, 5, Seed(1)).unwrap();
        assert_eq!(c.num_colors, 1);
        let k4 = Graph::complete(4);
        let c = p_treedepth_coloring(&k4, 2, 4, 5, Seed(1)).unwrap();
        assert_eq!(c.num_colors, 4);
        assert!(p_treedepth_coloring(&k4, 2, 3, 5, Seed(1)).is_none());
        let c6 = Graph::cycle(6);
        let c = p_treedepth_coloring(&c6, 2, 4, 20, Seed(3)).unwrap();
        assert!(c.num_colors <= 4);
        assert!(validate_p_treedepth_coloring(&c6, &c).unwrap());
    }
}
