//! Copy-set refinement stages and blind reconstruction of pattern copies
//! from parallel parts.
//!
//! Every stage takes a set of copies and returns a subset with more
//! structure: edge-disjoint, degree preserving, uniformly colored, low
//! treedepth, uniformly layered. Each stage checks the size bound it is
//! supposed to guarantee and fails loudly when the bound does not hold.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    degeneracy, find_copy_from, induced_edge_subgraph, CopyGraph, CopySet, EdgeSet, Graph, Vertex,
};
use crate::oracle::Seed;
use crate::sparsity::{
    p_treedepth_coloring, tree_embedding, treedepth_exact, validate_p_treedepth_coloring,
    validate_tree_embedding, TreeOrder, TreedepthColoring,
};

const BOUND_SLACK: f64 = 1e-9;

fn require_no_isolated(pattern: &Graph) -> Result<()> {
    if pattern.n() == 0 || pattern.edge_count() == 0 {
        return Err(Error::Precondition(
            "pattern must have at least one edge".into(),
        ));
    }
    if let Some(v) = pattern.isolated_vertices().first() {
        return Err(Error::Precondition(format!(
            "pattern vertex {v} is isolated; strip it first"
        )));
    }
    Ok(())
}

fn require_edge_disjoint(copies: &CopySet) -> Result<()> {
    if !copies.check_edge_disjoint() {
        return Err(Error::Precondition("copies are not edge-disjoint".into()));
    }
    Ok(())
}

/// Greedy saturation: keeps adding the first copy that avoids every edge
/// used so far until none is left. The result is maximal.
pub fn extract_edge_disjoint_copies(g: &Graph, pattern: &Graph) -> Result<CopySet> {
    require_no_isolated(pattern)?;
    let mut used = EdgeSet::new();
    let mut out = CopySet::new(pattern.clone());
    // roots below the last successful one failed with fewer forbidden edges
    let mut floor = 0;
    while let Some((copy, root)) = find_copy_from(g, pattern, &used, floor, |_, _| true) {
        for (u, v) in copy.host_edges(pattern) {
            used.insert(u, v);
        }
        out.push(copy);
        floor = root;
    }
    Ok(out.flag_edge_disjoint())
}

/// One-sided farness certificate: `|copies| > eps * |g|` edge-disjoint
/// copies force more than `eps * |g|` deletions.
pub fn certify_eps_far(g: &Graph, copies: &CopySet, eps: f64) -> bool {
    copies.check_edge_disjoint() && copies.len() as f64 > eps * g.n() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    /// The preservation constant `alpha / (4d)`.
    pub c: f64,
    /// Vertices chosen by the loop, in order.
    pub removed_at: Vec<Vertex>,
    /// `|G[H']|`.
    pub vertices_kept: usize,
}

fn copy_degrees(copies: &CopySet, alive: &[bool]) -> HashMap<Vertex, usize> {
    let pattern = copies.pattern();
    let mut deg: HashMap<Vertex, usize> = HashMap::new();
    for (i, c) in copies.iter().enumerate() {
        if !alive[i] {
            continue;
        }
        for (a, &v) in c.image().iter().enumerate() {
            *deg.entry(v).or_default() += pattern.degree(a);
        }
    }
    deg
}

/// Removes all copies through any vertex of `G[H']` that is not
/// `(alpha/4d)`-degree preserved (smallest such vertex first) until none is
/// left, then checks the three guaranteed bounds.
pub fn degree_preserving_prune(
    g: &Graph,
    copies: &CopySet,
    alpha: f64,
    d: usize,
) -> Result<(CopySet, PruneReport)> {
    const STAGE: &str = "degree_preserving_prune";
    require_no_isolated(copies.pattern())?;
    require_edge_disjoint(copies)?;
    let (true_d, _) = degeneracy(g);
    if d == 0 || d < true_d {
        return Err(Error::Precondition(format!(
            "degeneracy bound d = {d} must be positive and at least the degeneracy {true_d}"
        )));
    }
    if alpha.is_nan() || alpha <= 0.0 || (copies.len() as f64) < alpha * g.n() as f64 - BOUND_SLACK
    {
        return Err(Error::Precondition(format!(
            "|H| = {} is below alpha * |G| = {}",
            copies.len(),
            alpha * g.n() as f64
        )));
    }
    let c = alpha / (4.0 * d as f64);
    let preserved = |v: Vertex, deg: usize| deg as f64 >= c * g.degree(v) as f64;
    let mut alive = vec![true; copies.len()];
    let mut deg = copy_degrees(copies, &alive);
    let mut at: HashMap<Vertex, Vec<usize>> = HashMap::new();
    for (i, cp) in copies.iter().enumerate() {
        for &v in cp.image() {
            at.entry(v).or_default().push(i);
        }
    }
    let mut failing: std::collections::BTreeSet<Vertex> = deg
        .iter()
        .filter(|&(&v, &k)| !preserved(v, k))
        .map(|(&v, _)| v)
        .collect();
    let mut removed_at = Vec::new();
    while let Some(v) = failing.pop_first() {
        if deg.get(&v).copied().unwrap_or(0) == 0 {
            continue;
        }
        removed_at.push(v);
        for &i in &at[&v] {
            if !alive[i] {
                continue;
            }
            alive[i] = false;
            for (a, &w) in copies.copies()[i].image().iter().enumerate() {
                let e = deg.get_mut(&w).expect("vertex of a live copy");
                *e -= copies.pattern().degree(a);
                if *e == 0 {
                    deg.remove(&w);
                    failing.remove(&w);
                } else if !preserved(w, *e) {
                    failing.insert(w);
                }
            }
        }
    }
    let kept = copies.subset((0..copies.len()).filter(|&i| alive[i]));
    let report = PruneReport {
        c,
        removed_at,
        vertices_kept: deg.len(),
    };
    let fail = |detail: String| Error::BoundViolated {
        stage: STAGE.into(),
        detail,
    };
    if let Some((&v, &k)) = deg.iter().find(|&(&v, &k)| !preserved(v, k)) {
        return Err(fail(format!(
            "vertex {v} keeps degree {k} of {}",
            g.degree(v)
        )));
    }
    let n = g.n() as f64;
    if (kept.len() as f64) < alpha * n / 2.0 - BOUND_SLACK {
        return Err(fail(format!(
            "{} copies kept, below alpha|G|/2 = {}",
            kept.len(),
            alpha * n / 2.0
        )));
    }
    if (deg.len() as f64) < alpha * n / (4.0 * d as f64) - BOUND_SLACK {
        return Err(fail(format!("|G[H']| = {} below alpha|G|/4d", deg.len())));
    }
    Ok((kept, report))
}

/// Checks `c`-degree preservation of `G[copies]` inside `g`.
pub fn is_degree_preserving(g: &Graph, copies: &CopySet, c: f64) -> bool {
    let cg = induced_edge_subgraph(copies);
    (cg.graph.n() as f64) >= c * g.n() as f64 - BOUND_SLACK
        && cg
            .graph
            .vertices()
            .all(|i| cg.graph.degree(i) as f64 >= c * g.degree(cg.host(i)) as f64 - BOUND_SLACK)
}

/// Largest `c` for which `G[copies]` is `c`-degree preserving in `g`.
pub fn degree_preservation(g: &Graph, copies: &CopySet) -> f64 {
    let cg = induced_edge_subgraph(copies);
    if g.n() == 0 {
        return 1.0;
    }
    cg.graph
        .vertices()
        .filter(|&i| g.degree(cg.host(i)) > 0)
        .map(|i| cg.graph.degree(i) as f64 / g.degree(cg.host(i)) as f64)
        .fold(cg.graph.n() as f64 / g.n() as f64, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoringReport {
    /// `ceil(N / |H|^|H|)`.
    pub required: usize,
    /// Assignments evaluated, including the deterministic first candidate.
    pub trials_used: u64,
}

/// Picks an assignment `f: V(G[H]) -> V(H)` and keeps the copies with
/// `f(h(x)) = x` for all `x`, until at least `ceil(N/|H|^|H|)` remain.
///
/// The first candidate assigns each host vertex the role it plays in the
/// first copy containing it, which keeps every copy of an already uniformly
/// colored set. Later candidates are uniform random assignments.
pub fn uniform_coloring_extract(
    copies: &CopySet,
    trials: u64,
    seed: Seed,
) -> Result<(CopySet, ColoringReport)> {
    require_edge_disjoint(copies)?;
    if copies.is_empty() {
        return Err(Error::Precondition("copy set is empty".into()));
    }
    let k = copies.pattern().n();
    let required = {
        let classes = (k as f64).powi(k as i32);
        (copies.len() as f64 / classes).ceil() as usize
    };
    let vertices = copies.vertex_union();
    let index: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let compatible = |f: &[usize]| -> Vec<usize> {
        copies
            .iter()
            .enumerate()
            .filter(|(_, c)| c.image().iter().enumerate().all(|(x, v)| f[index[v]] == x))
            .map(|(i, _)| i)
            .collect()
    };
    let mut f = vec![usize::MAX; vertices.len()];
    for c in copies.iter() {
        for (x, v) in c.image().iter().enumerate() {
            let slot = &mut f[index[v]];
            if *slot == usize::MAX {
                *slot = x;
            }
        }
    }
    let mut best = compatible(&f);
    let mut used = 1;
    let mut rng = seed.rng();
    while best.len() < required && used < trials {
        for slot in f.iter_mut() {
            *slot = rng.random_range(0..k);
        }
        let kept = compatible(&f);
        if kept.len() > best.len() {
            best = kept;
        }
        used += 1;
    }
    if best.len() < required {
        return Err(Error::TrialsExhausted {
            trials: used,
            best: best.len(),
            required,
        });
    }
    let out = copies.subset(best).flag_uniformly_colored();
    Ok((
        out,
        ColoringReport {
            required,
            trials_used: used,
        },
    ))
}

/// Result of a pigeonhole restriction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucketing {
    /// Key shared by the kept copies.
    pub key: Vec<usize>,
    /// Size of every nonempty bucket, largest first.
    pub bucket_sizes: Vec<usize>,
    /// Number of possible keys (`l^|H|` or `d^|H|`).
    pub classes: f64,
}

fn largest_bucket(keys: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut buckets: BTreeMap<&Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        buckets.entry(k).or_default().push(i);
    }
    // BTreeMap iterates keys ascending, so max_by keeps the smallest key on ties
    let (key, members) = buckets
        .iter()
        .fold(
            None::<(&Vec<usize>, &Vec<usize>)>,
            |best, (k, m)| match best {
                Some((_, bm)) if bm.len() >= m.len() => best,
                _ => Some((k, m)),
            },
        )
        .expect("at least one copy");
    let mut sizes: Vec<usize> = buckets.values().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    (key.clone(), members.clone(), sizes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColorRestriction {
    pub copies: CopySet,
    pub bucketing: Bucketing,
    /// Exact treedepth of `G[output]` when every component fits the cap.
    pub treedepth: Option<usize>,
}

/// Buckets copies by the set of colors their image uses and keeps the
/// largest bucket. `coloring` colors the vertices of `G[copies]` (local ids
/// of [`induced_edge_subgraph`]) and must be a valid `|H|`-treedepth
/// coloring.
pub fn restrict_by_color_tuple(
    copies: &CopySet,
    coloring: &TreedepthColoring,
) -> Result<ColorRestriction> {
    const STAGE: &str = "restrict_by_color_tuple";
    if copies.is_empty() {
        return Err(Error::Precondition("copy set is empty".into()));
    }
    let k = copies.pattern().n();
    if coloring.p < k {
        return Err(Error::InvalidColoring(format!(
            "coloring has p = {} < |H| = {k}",
            coloring.p
        )));
    }
    let cg = induced_edge_subgraph(copies);
    if !validate_p_treedepth_coloring(&cg.graph, coloring)? {
        return Err(Error::InvalidColoring(
            "not a valid p-treedepth coloring of G[H]".into(),
        ));
    }
    let keys: Vec<Vec<usize>> = copies
        .iter()
        .map(|c| {
            let mut set: Vec<usize> = c
                .image()
                .iter()
                .map(|&v| coloring.color[cg.local(v).expect("copy vertex")])
                .collect();
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect();
    let (key, members, bucket_sizes) = largest_bucket(&keys);
    let out = copies.subset(members);
    let classes = (coloring.num_colors as f64).powi(k as i32);
    if (out.len() as f64) < copies.len() as f64 / classes - BOUND_SLACK {
        return Err(Error::BoundViolated {
            stage: STAGE.into(),
            detail: format!(
                "{} copies kept, below {}/{classes}",
                out.len(),
                copies.len()
            ),
        });
    }
    let treedepth = treedepth_exact(&induced_edge_subgraph(&out).graph)
        .ok()
        .map(|(d, _)| d);
    if let Some(d) = treedepth {
        if d > k {
            return Err(Error::BoundViolated {
                stage: STAGE.into(),
                detail: format!("G[output] has treedepth {d} > |H| = {k}"),
            });
        }
    }
    Ok(ColorRestriction {
        copies: out,
        bucketing: Bucketing {
            key,
            bucket_sizes,
            classes,
        },
        treedepth,
    })
}

/// Copies of `H` with a uniformly layered tree embedding of `G[copies]`.
///
/// `layer_of_color[x]` is the layer holding exactly the images of pattern
/// vertex `x`; layers are a permutation of `0..|H|` and strictly increase
/// along every ancestor chain of `embedding`, so colors that shared a level
/// of the source embedding sit on separate sub-levels ordered by pattern id.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredCopies {
    copies: CopySet,
    copy_graph: CopyGraph,
    embedding: TreeOrder,
    layer_of_color: Vec<usize>,
    roles: HashMap<Vertex, Vertex>,
    copies_at: HashMap<Vertex, Vec<usize>>,
}

impl LayeredCopies {
    /// Assembles and validates a layered copy set. `embedding` is indexed
    /// by local ids of `induced_edge_subgraph(&copies)`.
    pub fn new(copies: CopySet, embedding: TreeOrder, layer_of_color: Vec<usize>) -> Result<Self> {
        let roles = copies
            .uniform_roles()
            .ok_or_else(|| Error::Precondition("copies are not uniformly colored".into()))?;
        require_edge_disjoint(&copies)?;
        let copy_graph = induced_edge_subgraph(&copies);
        let mut copies_at: HashMap<Vertex, Vec<usize>> = HashMap::new();
        for (i, c) in copies.iter().enumerate() {
            for &v in c.image() {
                copies_at.entry(v).or_default().push(i);
            }
        }
        let layered = LayeredCopies {
            copies: copies.flag_edge_disjoint().flag_uniformly_colored(),
            copy_graph,
            embedding,
            layer_of_color,
            roles,
            copies_at,
        };
        layered.check()?;
        Ok(layered)
    }

    fn check(&self) -> Result<()> {
        let k = self.copies.pattern().n();
        let mut perm = self.layer_of_color.clone();
        perm.sort_unstable();
        if perm != (0..k).collect::<Vec<_>>() {
            return Err(Error::Precondition(
                "layers must be a permutation of 0..|H|".into(),
            ));
        }
        if !validate_tree_embedding(&self.copy_graph.graph, &self.embedding, k)? {
            return Err(Error::Precondition(
                "embedding is not a tree embedding of G[H] of depth <= |H|".into(),
            ));
        }
        for local in self.copy_graph.graph.vertices() {
            if let Some(p) = self.embedding.parent(local) {
                if self.layer_of_local(p) >= self.layer_of_local(local) {
                    return Err(Error::Precondition(format!(
                        "layer does not increase from host vertex {} to {}",
                        self.copy_graph.host(p),
                        self.copy_graph.host(local)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Re-runs every structural check.
    pub fn validate(&self, host: &Graph) -> bool {
        self.copies.validate(host) && self.copies.check_edge_disjoint() && self.check().is_ok()
    }

    pub fn copies(&self) -> &CopySet {
        &self.copies
    }

    pub fn pattern(&self) -> &Graph {
        self.copies.pattern()
    }

    pub fn copy_graph(&self) -> &CopyGraph {
        &self.copy_graph
    }

    pub fn embedding(&self) -> &TreeOrder {
        &self.embedding
    }

    pub fn layer_of_color(&self, x: Vertex) -> usize {
        self.layer_of_color[x]
    }

    /// Pattern vertex occupying each layer, top to bottom.
    pub fn color_of_level(&self) -> Vec<Vertex> {
        let mut out = vec![0; self.layer_of_color.len()];
        for (x, &l) in self.layer_of_color.iter().enumerate() {
            out[l] = x;
        }
        out
    }

    /// Number of layers, which is `|H|`.
    pub fn depth(&self) -> usize {
        self.layer_of_color.len()
    }

    /// Pattern vertex played by host vertex `v`.
    pub fn role(&self, v: Vertex) -> Option<Vertex> {
        self.roles.get(&v).copied()
    }

    pub fn layer_of_host(&self, v: Vertex) -> Option<usize> {
        self.role(v).map(|x| self.layer_of_color[x])
    }

    fn layer_of_local(&self, local: Vertex) -> usize {
        self.layer_of_host(self.copy_graph.host(local))
            .expect("copy vertex has a role")
    }

    /// Indices of copies whose image contains `v`.
    pub fn copies_at(&self, v: Vertex) -> &[usize] {
        self.copies_at.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Keeps the given copies; layering is inherited by subsets.
    pub fn restrict(&self, keep: impl IntoIterator<Item = usize>) -> Result<LayeredCopies> {
        let sub = self.copies.subset(keep);
        let cg = induced_edge_subgraph(&sub);
        let old_local: Vec<Vertex> = cg
            .to_host
            .iter()
            .map(|&v| self.copy_graph.local(v).expect("subset vertex"))
            .collect();
        LayeredCopies::new(
            sub,
            self.embedding.restrict(&old_local),
            self.layer_of_color.clone(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayeredExtraction {
    pub layered: LayeredCopies,
    pub bucketing: Bucketing,
    /// Depth of the input embedding.
    pub input_depth: usize,
}

/// Buckets uniformly colored copies by the level tuple of their images in
/// `embedding` (a tree embedding of `G[copies]`, local ids), keeps the
/// largest bucket and restricts the embedding to it. Colors sharing a level
/// are split into sub-levels by pattern vertex id.
pub fn uniformly_layered_extract(
    copies: &CopySet,
    embedding: &TreeOrder,
) -> Result<LayeredExtraction> {
    const STAGE: &str = "uniformly_layered_extract";
    if copies.is_empty() {
        return Err(Error::Precondition("copy set is empty".into()));
    }
    if !copies.check_uniformly_colored() {
        return Err(Error::Precondition(
            "copies are not uniformly colored".into(),
        ));
    }
    require_edge_disjoint(copies)?;
    let cg = induced_edge_subgraph(copies);
    let d = embedding.depth();
    if !validate_tree_embedding(&cg.graph, embedding, d)? {
        return Err(Error::Precondition(
            "embedding is not a tree embedding of G[H]".into(),
        ));
    }
    let keys: Vec<Vec<usize>> = copies
        .iter()
        .map(|c| {
            c.image()
                .iter()
                .map(|&v| embedding.level(cg.local(v).expect("copy vertex")))
                .collect()
        })
        .collect();
    let (key, members, bucket_sizes) = largest_bucket(&keys);
    let k = copies.pattern().n();
    let classes = (d as f64).powi(k as i32);
    let kept = copies.subset(members);
    if (kept.len() as f64) < copies.len() as f64 / classes - BOUND_SLACK {
        return Err(Error::BoundViolated {
            stage: STAGE.into(),
            detail: format!(
                "{} copies kept, below {}/{classes}",
                kept.len(),
                copies.len()
            ),
        });
    }
    let mut colors: Vec<Vertex> = (0..k).collect();
    colors.sort_by_key(|&x| (key[x], x));
    let mut layer_of_color = vec![0; k];
    for (layer, &x) in colors.iter().enumerate() {
        layer_of_color[x] = layer;
    }
    let kept_cg = induced_edge_subgraph(&kept);
    let old_local: Vec<Vertex> = kept_cg
        .to_host
        .iter()
        .map(|&v| cg.local(v).expect("kept vertex"))
        .collect();
    let layered = LayeredCopies::new(kept, embedding.restrict(&old_local), layer_of_color)
        .map_err(|e| Error::BoundViolated {
            stage: STAGE.into(),
            detail: e.to_string(),
        })?;
    Ok(LayeredExtraction {
        layered,
        bucketing: Bucketing {
            key,
            bucket_sizes,
            classes,
        },
        input_depth: d,
    })
}

/// Sources, inner vertices and parallel parts of a pattern under a vertex
/// ordering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub ordering: Vec<Vertex>,
    pub is_source: Vec<bool>,
    pub sources: Vec<Vertex>,
    /// Parallel parts, each sorted, ordered by smallest vertex.
    pub parts: Vec<Vec<Vertex>>,
    /// Sources adjacent to each part.
    pub part_sources: Vec<Vec<Vertex>>,
    /// Index of the pattern component containing each part.
    pub part_component: Vec<usize>,
}

impl Decomposition {
    /// Parts adjacent to source `s`.
    pub fn parts_at(&self, s: Vertex) -> impl Iterator<Item = usize> + '_ {
        (0..self.parts.len()).filter(move |&p| self.part_sources[p].contains(&s))
    }

    pub fn parts_of_component(&self, comp: usize) -> Vec<usize> {
        (0..self.parts.len())
            .filter(|&p| self.part_component[p] == comp)
            .collect()
    }
}

/// A vertex is a source iff none of its predecessors in `ordering` is a
/// neighbor; parts are the components of the pattern minus its sources.
pub fn decompose_sources_parts(pattern: &Graph, ordering: &[Vertex]) -> Result<Decomposition> {
    let k = pattern.n();
    let mut pos = vec![usize::MAX; k];
    for (i, &x) in ordering.iter().enumerate() {
        if x >= k || pos[x] != usize::MAX {
            return Err(Error::Precondition(
                "ordering must be a permutation of V(H)".into(),
            ));
        }
        pos[x] = i;
    }
    if ordering.len() != k {
        return Err(Error::Precondition("ordering must cover V(H)".into()));
    }
    let is_source: Vec<bool> = (0..k)
        .map(|x| pattern.neighbors(x).iter().all(|&y| pos[y] > pos[x]))
        .collect();
    let sources: Vec<Vertex> = (0..k).filter(|&x| is_source[x]).collect();
    let inner: Vec<Vertex> = (0..k).filter(|&x| !is_source[x]).collect();
    let inner_graph = pattern.induced_subgraph(&inner);
    let comp_of: HashMap<Vertex, usize> = pattern
        .components()
        .into_iter()
        .enumerate()
        .flat_map(|(i, c)| c.into_iter().map(move |v| (v, i)))
        .collect();
    let mut parts = Vec::new();
    let mut part_sources = Vec::new();
    let mut part_component = Vec::new();
    for comp in inner_graph.components() {
        let part: Vec<Vertex> = comp.iter().map(|&i| inner[i]).collect();
        let mut srcs: Vec<Vertex> = part
            .iter()
            .flat_map(|&x| pattern.neighbors(x).iter().copied())
            .filter(|&y| is_source[y])
            .collect();
        srcs.sort_unstable();
        srcs.dedup();
        part_component.push(comp_of[&part[0]]);
        parts.push(part);
        part_sources.push(srcs);
    }
    Ok(Decomposition {
        ordering: ordering.to_vec(),
        is_source,
        sources,
        parts,
        part_sources,
        part_component,
    })
}

/// The image of parallel part `part` under copy number `copy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartCopy {
    pub part: usize,
    pub copy: usize,
}

/// One admissible extension step: enter `part` of copy `copy` through the
/// port host vertex `port`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub port: Vertex,
    pub copy: usize,
    pub part: usize,
}

/// All extensions of `found` through ports of maximal layer, sorted by
/// (port, copy, part).
pub fn port_candidates(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    found: &[PartCopy],
) -> Vec<Candidate> {
    let comp = decomp.part_component[found[0].part];
    let have: HashSet<usize> = found.iter().map(|pc| pc.part).collect();
    let missing_at = |s: Vertex| {
        decomp
            .parts_at(s)
            .filter(|p| decomp.part_component[*p] == comp && !have.contains(p))
            .collect::<Vec<_>>()
    };
    // (layer, port host vertex, source)
    let mut ports: Vec<(usize, Vertex, Vertex)> = Vec::new();
    for pc in found {
        let copy = &layered.copies().copies()[pc.copy];
        for &s in &decomp.part_sources[pc.part] {
            if !missing_at(s).is_empty() {
                let hv = copy.get(s);
                ports.push((layered.layer_of_color(s), hv, s));
            }
        }
    }
    let Some(top) = ports.iter().map(|p| p.0).max() else {
        return Vec::new();
    };
    ports.retain(|p| p.0 == top);
    ports.sort_unstable();
    ports.dedup();
    let mut out = Vec::new();
    for &(_, hv, s) in &ports {
        let parts = missing_at(s);
        for &j in layered.copies_at(hv) {
            if layered.copies().copies()[j].get(s) != hv {
                continue;
            }
            for &p in &parts {
                out.push(Candidate {
                    port: hv,
                    copy: j,
                    part: p,
                });
            }
        }
    }
    out.sort_unstable();
    out
}

/// Grows a set of part copies from `seed` by repeatedly entering a missing
/// part of the seed's component through a port of maximal layer, until the
/// component is covered. `choose` picks among the admissible candidates
/// (sorted by port, copy, part).
pub fn construct_component_copy_with<F>(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    seed: PartCopy,
    mut choose: F,
) -> Result<Vec<PartCopy>>
where
    F: FnMut(&[Candidate]) -> usize,
{
    if seed.part >= decomp.parts.len() || seed.copy >= layered.copies().len() {
        return Err(Error::Precondition("seed part copy out of range".into()));
    }
    let comp = decomp.part_component[seed.part];
    let total = decomp.parts_of_component(comp).len();
    let mut found = vec![seed];
    while found.len() < total {
        let candidates = port_candidates(layered, decomp, &found);
        if candidates.is_empty() {
            return Err(Error::LayeringInvariantViolated);
        }
        let pick = choose(&candidates).min(candidates.len() - 1);
        let c = candidates[pick];
        found.push(PartCopy {
            part: c.part,
            copy: c.copy,
        });
    }
    Ok(found)
}

/// Default tie-breaks: smallest port host vertex, then smallest copy index,
/// then smallest part index.
pub fn construct_component_copy(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    seed: PartCopy,
) -> Result<Vec<PartCopy>> {
    construct_component_copy_with(layered, decomp, seed, |_| 0)
}

/// Runs the construction under every possible sequence of choices (up to
/// `limit` runs) and returns each outcome.
pub fn all_component_constructions(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    seed: PartCopy,
    limit: usize,
) -> Vec<Result<Vec<PartCopy>>> {
    fn rec(
        layered: &LayeredCopies,
        decomp: &Decomposition,
        found: &mut Vec<PartCopy>,
        total: usize,
        limit: usize,
        out: &mut Vec<Result<Vec<PartCopy>>>,
    ) {
        if out.len() >= limit {
            return;
        }
        if found.len() == total {
            out.push(Ok(found.clone()));
            return;
        }
        let candidates = port_candidates(layered, decomp, found);
        if candidates.is_empty() {
            out.push(Err(Error::LayeringInvariantViolated));
            return;
        }
        for c in candidates {
            found.push(PartCopy {
                part: c.part,
                copy: c.copy,
            });
            rec(layered, decomp, found, total, limit, out);
            found.pop();
        }
    }
    let comp = decomp.part_component[seed.part];
    let total = decomp.parts_of_component(comp).len();
    let mut out = Vec::new();
    rec(layered, decomp, &mut vec![seed], total, limit, &mut out);
    out
}

/// Partial copy of a pattern: `assignment[x]` is the image of `x` when set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCopy {
    pub assignment: Vec<Option<Vertex>>,
}

impl ComponentCopy {
    pub fn domain(&self) -> Vec<Vertex> {
        (0..self.assignment.len())
            .filter(|&x| self.assignment[x].is_some())
            .collect()
    }

    /// Injective on its domain, and every pattern edge inside the domain
    /// maps to a host edge.
    pub fn validate(&self, pattern: &Graph, host: &Graph) -> bool {
        let imgs: Vec<Vertex> = self.assignment.iter().flatten().copied().collect();
        let distinct: HashSet<Vertex> = imgs.iter().copied().collect();
        distinct.len() == imgs.len()
            && pattern
                .edges()
                .all(|(a, b)| match (self.assignment[a], self.assignment[b]) {
                    (Some(x), Some(y)) => host.has_edge(x, y),
                    _ => true,
                })
    }

    /// Full copy when every pattern vertex is assigned.
    pub fn to_copy(&self) -> Option<crate::graph::PatternCopy> {
        self.assignment
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(crate::graph::PatternCopy::new)
    }
}

/// Union of the part images and their adjacent source images. Fails on the
/// first source mapped to two different host vertices.
pub fn assemble_copy(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    parts: &[PartCopy],
) -> Result<ComponentCopy> {
    let mut assignment: Vec<Option<Vertex>> = vec![None; layered.pattern().n()];
    let mut seen_parts = HashSet::new();
    for pc in parts {
        if !seen_parts.insert(pc.part) {
            return Err(Error::Precondition(format!("part {} given twice", pc.part)));
        }
        let copy = &layered.copies().copies()[pc.copy];
        for &x in &decomp.parts[pc.part] {
            assignment[x] = Some(copy.get(x));
        }
        for &s in &decomp.part_sources[pc.part] {
            let hv = copy.get(s);
            match assignment[s] {
                Some(prev) if prev != hv => {
                    return Err(Error::IncompatibleParts {
                        source_vertex: s,
                        first: prev,
                        second: hv,
                    })
                }
                _ => assignment[s] = Some(hv),
            }
        }
    }
    Ok(ComponentCopy { assignment })
}

/// Part copies are pairwise compatible: shared adjacent sources agree.
pub fn pairwise_compatible(
    layered: &LayeredCopies,
    decomp: &Decomposition,
    parts: &[PartCopy],
) -> bool {
    parts.iter().enumerate().all(|(i, a)| {
        parts[i + 1..].iter().all(|b| {
            decomp.part_sources[a.part]
                .iter()
                .filter(|s| decomp.part_sources[b.part].contains(s))
                .all(|&s| {
                    layered.copies().copies()[a.copy].get(s)
                        == layered.copies().copies()[b.copy].get(s)
                })
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineOrder {
    /// extract, uniform coloring, tree embedding, layering, pruning.
    Layered,
    /// extract, treedepth-coloring restriction, pruning.
    ColorRestrict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub order: PipelineOrder,
    pub coloring_trials: u64,
    pub color_budget: usize,
    pub coloring_restarts: usize,
    pub seed: Seed,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            order: PipelineOrder::Layered,
            coloring_trials: 1_000_000,
            color_budget: 12,
            coloring_restarts: 20,
            seed: Seed(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub input: usize,
    pub output: usize,
    /// Lower bound the output size must meet.
    pub bound: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub stages: Vec<StageReport>,
    pub copies: CopySet,
    pub layered: Option<LayeredCopies>,
    /// Isolated pattern vertices dropped before the first stage.
    pub stripped_isolated: usize,
}

fn stage(
    name: &str,
    input: usize,
    output: usize,
    bound: f64,
    detail: Option<String>,
) -> Result<StageReport> {
    let holds = output as f64 >= bound - BOUND_SLACK;
    let report = StageReport {
        stage: name.into(),
        input,
        output,
        bound,
        holds,
        detail,
    };
    if !holds {
        return Err(Error::BoundViolated {
            stage: name.into(),
            detail: format!("output {output} below bound {bound}"),
        });
    }
    Ok(report)
}

/// Runs the whole refinement chain on `g`, checking each stage's bound.
pub fn reduce_to_layered(
    g: &Graph,
    pattern: &Graph,
    eps: f64,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidProximity(eps));
    }
    let (core, _) = pattern.without_isolated();
    let stripped_isolated = pattern.n() - core.n();
    let k = core.n();
    let n = g.n() as f64;
    let mut stages = Vec::new();

    let h1 = extract_edge_disjoint_copies(g, &core)?;
    stages.push(stage(
        "extract_edge_disjoint_copies",
        0,
        h1.len(),
        eps * n / core.edge_count() as f64,
        Some(format!(
            "certified_eps_far={}",
            certify_eps_far(g, &h1, eps)
        )),
    )?);

    let (before_prune, layered) = match opts.order {
        PipelineOrder::Layered => {
            let (h2, rep) = uniform_coloring_extract(&h1, opts.coloring_trials, opts.seed)?;
            stages.push(stage(
                "uniform_coloring_extract",
                h1.len(),
                h2.len(),
                rep.required as f64,
                Some(format!("trials_used={}", rep.trials_used)),
            )?);
            let cg = induced_edge_subgraph(&h2);
            let (embedding, exact) = tree_embedding(&cg.graph);
            let ext = uniformly_layered_extract(&h2, &embedding)?;
            stages.push(stage(
                "uniformly_layered_extract",
                h2.len(),
                ext.layered.copies().len(),
                h2.len() as f64 / ext.bucketing.classes,
                Some(format!(
                    "embedding_depth={} exact={exact} layers={}",
                    ext.input_depth,
                    ext.layered.depth()
                )),
            )?);
            (ext.layered.copies().clone(), Some(ext.layered))
        }
        PipelineOrder::ColorRestrict => {
            let cg = induced_edge_subgraph(&h1);
            let coloring = p_treedepth_coloring(
                &cg.graph,
                k,
                opts.color_budget,
                opts.coloring_restarts,
                opts.seed,
            )
            .ok_or_else(|| Error::BoundViolated {
                stage: "p_treedepth_coloring".into(),
                detail: format!(
                    "no {k}-treedepth coloring with {} colors found",
                    opts.color_budget
                ),
            })?;
            let r = restrict_by_color_tuple(&h1, &coloring)?;
            stages.push(stage(
                "restrict_by_color_tuple",
                h1.len(),
                r.copies.len(),
                h1.len() as f64 / r.bucketing.classes,
                Some(format!(
                    "colors={} treedepth={:?}",
                    coloring.num_colors, r.treedepth
                )),
            )?);
            (r.copies, None)
        }
    };

    let alpha = before_prune.len() as f64 / n;
    let (d, _) = degeneracy(g);
    let d = d.max(1);
    let (pruned, rep) = degree_preserving_prune(g, &before_prune, alpha, d)?;
    stages.push(stage(
        "degree_preserving_prune",
        before_prune.len(),
        pruned.len(),
        alpha * n / 2.0,
        Some(format!("c={} vertices_kept={}", rep.c, rep.vertices_kept)),
    )?);

    let layered = match layered {
        Some(l) => {
            let keep: HashSet<&crate::graph::PatternCopy> = pruned.iter().collect();
            let idx: Vec<usize> = (0..l.copies().len())
                .filter(|&i| keep.contains(&l.copies().copies()[i]))
                .collect();
            Some(l.restrict(idx)?)
        }
        None => None,
    };
    Ok(PipelineOutcome {
        stages,
        copies: pruned,
        layered,
        stripped_isolated,
    })
}
