//! Instance generators with farness certificates, Monte-Carlo rejection
//! estimates, query sweeps and empirical checks of the BFS probability
//! bounds.
//!
//! Trials run in parallel on a rayon pool. Trial `i` always uses
//! `seed.derive(i)` and results are collected in trial order, so reports
//! do not depend on the number of workers.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{
    find_copy_where, induced_edge_subgraph, CopySet, EdgeSet, Graph, PatternCopy, Vertex,
};
use crate::oracle::{GraphOracle, Seed};
use crate::oracles::bfs_event_probability;
use crate::pipeline::{
    certify_eps_far, decompose_sources_parts, is_degree_preserving, LayeredCopies,
};
use crate::tester::{random_bounded_bfs, test_h_freeness, ExploredSubgraph, TesterShape};

/// Two-sided 99% normal quantile.
pub const WILSON_Z99: f64 = 2.575_829_303_548_9;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let denom = 1.0 + z2 / n;
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

pub const BUILTIN_PATTERNS: [&str; 4] = ["triangle", "p5", "c4", "k4"];

pub fn builtin_pattern(name: &str) -> Option<Graph> {
    match name {
        "triangle" => Some(Graph::complete(3)),
        "p5" => Some(Graph::path(5)),
        "c4" => Some(Graph::cycle(4)),
        "k4" => Some(Graph::complete(4)),
        _ => None,
    }
}

/// A host graph, the pattern it is meant to be far from, and edge-disjoint
/// copies certifying the distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub generator: String,
    pub params: Value,
    pub graph: Graph,
    pub pattern: Graph,
    pub certificate: Option<CopySet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub generator: String,
    pub params: Value,
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub certified: bool,
}

impl Instance {
    /// Every `eps` strictly below this value is certified.
    pub fn eps_bound(&self) -> f64 {
        match &self.certificate {
            Some(c) if self.graph.n() > 0 => c.len() as f64 / self.graph.n() as f64,
            _ => 0.0,
        }
    }

    pub fn certifies(&self, eps: f64) -> bool {
        self.certificate
            .as_ref()
            .is_some_and(|c| c.validate(&self.graph) && certify_eps_far(&self.graph, c, eps))
    }

    pub fn summary(&self, eps: f64) -> InstanceSummary {
        InstanceSummary {
            generator: self.generator.clone(),
            params: self.params.clone(),
            n: self.graph.n(),
            m: self.graph.edge_count(),
            eps,
            certified: self.certifies(eps),
        }
    }

    /// Certificate as JSON: the copies' images in host ids.
    pub fn certificate_json(&self) -> Value {
        json!({
            "eps_bound": self.eps_bound(),
            "copies": self.certificate.as_ref().map(|c| c.copies().to_vec()).unwrap_or_default(),
        })
    }
}

fn p5_family_edges(k: usize) -> (Vec<(Vertex, Vertex)>, Vec<PatternCopy>) {
    let mut edges = Vec::with_capacity(4 * k);
    let mut copies = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (3 + i, 3 + k + i);
        edges.extend([(0, a), (a, 1), (1, b), (b, 2)]);
        copies.push(PatternCopy::new(vec![0, a, 1, b, 2]));
    }
    (edges, copies)
}

/// Hubs `u = 0`, `v = 1`, `w = 2`, spokes `a_i = 3 + i` and `b_i = 3 + k + i`
/// with edges `u-a_i`, `a_i-v`, `v-b_i`, `b_i-w`. Certified by the `k`
/// paths `u a_i v b_i w`.
pub fn gen_p5_family(k: usize) -> Result<Instance> {
    if k == 0 {
        return Err(Error::Generation("p5 family needs k >= 1".into()));
    }
    let (edges, copies) = p5_family_edges(k);
    let graph = Graph::from_edges(3 + 2 * k, edges)?;
    let pattern = Graph::path(5);
    Ok(Instance {
        generator: "p5".into(),
        params: json!({ "k": k }),
        certificate: Some(CopySet::from_copies(pattern.clone(), copies).flag_edge_disjoint()),
        graph,
        pattern,
    })
}

/// The P5 family with `k` pendant leaves on each of `u` and `w`, so the
/// planted copies span a 1/2-degree preserving subgraph.
pub fn gen_p5_pendant_padded(k: usize) -> Result<Instance> {
    if k == 0 {
        return Err(Error::Generation("p5 family needs k >= 1".into()));
    }
    let (mut edges, copies) = p5_family_edges(k);
    let base = 3 + 2 * k;
    for i in 0..k {
        edges.push((0, base + i));
        edges.push((2, base + k + i));
    }
    let graph = Graph::from_edges(base + 2 * k, edges)?;
    let pattern = Graph::path(5);
    Ok(Instance {
        generator: "p5_pendant".into(),
        params: json!({ "k": k }),
        certificate: Some(CopySet::from_copies(pattern.clone(), copies).flag_edge_disjoint()),
        graph,
        pattern,
    })
}

/// `m` vertex-disjoint copies of `pattern` followed by a padding path of
/// `pad_path` vertices.
pub fn gen_planted_union(pattern: &Graph, m: usize, pad_path: usize) -> Result<Instance> {
    if m == 0 {
        return Err(Error::Generation("planted union needs m >= 1".into()));
    }
    let k = pattern.n();
    let mut edges = Vec::new();
    let mut copies = Vec::with_capacity(m);
    for i in 0..m {
        let off = i * k;
        edges.extend(pattern.edges().map(|(a, b)| (off + a, off + b)));
        copies.push(PatternCopy::new((off..off + k).collect()));
    }
    let base = m * k;
    edges.extend((1..pad_path).map(|i| (base + i - 1, base + i)));
    let graph = Graph::from_edges(base + pad_path, edges)?;
    Ok(Instance {
        generator: "planted".into(),
        params: json!({ "m": m, "pad_path": pad_path, "pattern_n": k, "pattern_m": pattern.edge_count() }),
        certificate: Some(CopySet::from_copies(pattern.clone(), copies).flag_edge_disjoint()),
        graph,
        pattern: pattern.clone(),
    })
}

const PLANT_RETRIES: usize = 1000;

/// Random graph of maximum degree at most `degree_cap` with `m` planted,
/// edge-disjoint copies of `pattern` on random vertices, then random
/// background edges while the cap allows.
pub fn gen_bounded_degree_planted(
    pattern: &Graph,
    n: usize,
    degree_cap: usize,
    m: usize,
    seed: Seed,
) -> Result<Instance> {
    let k = pattern.n();
    if degree_cap < pattern.max_degree() {
        return Err(Error::Generation(format!(
            "degree cap {degree_cap} below the pattern's maximum degree {}",
            pattern.max_degree()
        )));
    }
    if m > 0 && n < k {
        return Err(Error::Generation("host smaller than the pattern".into()));
    }
    let mut rng = seed.rng();
    let mut used = EdgeSet::new();
    let mut deg = vec![0usize; n];
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    let mut copies = Vec::with_capacity(m);
    for _ in 0..m {
        let mut placed = false;
        for _ in 0..PLANT_RETRIES {
            let image: Vec<Vertex> = rand::seq::index::sample(&mut rng, n, k).into_vec();
            let fits = (0..k).all(|a| deg[image[a]] + pattern.degree(a) <= degree_cap)
                && pattern
                    .edges()
                    .all(|(a, b)| !used.contains(image[a], image[b]));
            if fits {
                for (a, b) in pattern.edges() {
                    used.insert(image[a], image[b]);
                    edges.push((image[a], image[b]));
                }
                for a in 0..k {
                    deg[image[a]] += pattern.degree(a);
                }
                copies.push(PatternCopy::new(image));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not plant copy {} of {m} within {PLANT_RETRIES} attempts",
                copies.len() + 1
            )));
        }
    }
    if n >= 2 {
        for _ in 0..n * degree_cap / 2 {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v && deg[u] < degree_cap && deg[v] < degree_cap && used.insert(u, v) {
                deg[u] += 1;
                deg[v] += 1;
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, edges)?;
    Ok(Instance {
        generator: "bounded".into(),
        params: json!({ "n": n, "degree_cap": degree_cap, "m": m, "seed": seed.0 }),
        certificate: Some(CopySet::from_copies(pattern.clone(), copies).flag_edge_disjoint()),
        graph,
        pattern: pattern.clone(),
    })
}

/// Copies of `pattern` whose source vertices under `ordering` are drawn
/// from a pool of `pool` host vertices per source role, while inner vertices
/// are fresh. Sources are independent, so every pattern edge meets a fresh
/// vertex and the copies are edge-disjoint and uniformly colored.
pub fn gen_shared_sources(
    pattern: &Graph,
    ordering: &[Vertex],
    copies: usize,
    pool: usize,
    seed: Seed,
) -> Result<Instance> {
    if pool == 0 || copies == 0 {
        return Err(Error::Generation(
            "shared-source instance needs copies >= 1 and pool >= 1".into(),
        ));
    }
    let decomp = decompose_sources_parts(pattern, ordering)?;
    let mut rng = seed.rng();
    let mut pool_of = vec![Vec::new(); pattern.n()];
    let mut next = 0;
    for &s in &decomp.sources {
        pool_of[s] = (next..next + pool).collect();
        next += pool;
    }
    let mut edges = Vec::new();
    let mut images = Vec::with_capacity(copies);
    for _ in 0..copies {
        let image: Vec<Vertex> = (0..pattern.n())
            .map(|x| {
                if decomp.is_source[x] {
                    pool_of[x][rng.random_range(0..pool)]
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect();
        edges.extend(pattern.edges().map(|(a, b)| (image[a], image[b])));
        images.push(PatternCopy::new(image));
    }
    let graph = Graph::from_edges(next, edges)?;
    let set = CopySet::from_copies(pattern.clone(), images)
        .flag_edge_disjoint()
        .flag_uniformly_colored();
    Ok(Instance {
        generator: "shared_sources".into(),
        params: json!({ "copies": copies, "pool": pool, "ordering": ordering, "seed": seed.0 }),
        certificate: Some(set),
        graph,
        pattern: pattern.clone(),
    })
}

/// Uniform random recursive tree: vertex `i` attaches to a uniform earlier
/// vertex.
pub fn gen_random_tree(n: usize, seed: Seed) -> Graph {
    let mut rng = seed.rng();
    let edges: Vec<(Vertex, Vertex)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    Graph::from_edges(n, edges).expect("tree edges are valid")
}

/// Random tree with every vertex degree at most `cap` (`cap >= 2`).
pub fn gen_random_bounded_tree(n: usize, cap: usize, seed: Seed) -> Graph {
    let mut rng = seed.rng();
    let mut deg = vec![0usize; n];
    let mut open: Vec<Vertex> = vec![0];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let slot = rng.random_range(0..open.len());
        let p = open[slot];
        edges.push((p, i));
        deg[p] += 1;
        deg[i] += 1;
        if deg[p] >= cap {
            open.swap_remove(slot);
        }
        open.push(i);
    }
    Graph::from_edges(n, edges).expect("tree edges are valid")
}

/// Named generator families sized by an approximate vertex count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenSpec {
    /// `p5`: the P5 family with `k = (size - 3) / 2`.
    P5,
    /// `planted:<pattern>`: `size / 10` copies plus a padding path up to
    /// `size` vertices.
    Planted(String),
    /// `bounded:<pattern>[:cap]`: `size` vertices, `size / 10` copies.
    Bounded(String, usize),
    /// `tree`: random recursive tree, no certificate.
    Tree,
}

impl FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let pattern_ok = |p: &str| {
            builtin_pattern(p)
                .map(|_| p.to_string())
                .ok_or_else(|| Error::Generation(format!("unknown pattern {p:?}")))
        };
        match parts.as_slice() {
            ["p5"] => Ok(GenSpec::P5),
            ["tree"] => Ok(GenSpec::Tree),
            ["planted", p] => Ok(GenSpec::Planted(pattern_ok(p)?)),
            ["bounded", p] => Ok(GenSpec::Bounded(pattern_ok(p)?, 5)),
            ["bounded", p, cap] => Ok(GenSpec::Bounded(
                pattern_ok(p)?,
                cap.parse().map_err(|_| Error::Generation(format!("bad degree cap {cap:?}")))?,
            )),
            _ => Err(Error::Generation(format!(
                "unknown generator {s:?} (expected p5, tree, planted:<pattern> or bounded:<pattern>[:cap])"
            ))),
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::P5 => write!(f, "p5"),
            GenSpec::Tree => write!(f, "tree"),
            GenSpec::Planted(p) => write!(f, "planted:{p}"),
            GenSpec::Bounded(p, cap) => write!(f, "bounded:{p}:{cap}"),
        }
    }
}

impl GenSpec {
    /// Pattern the family is built around (`p5` for trees).
    pub fn pattern_name(&self) -> &str {
        match self {
            GenSpec::P5 | GenSpec::Tree => "p5",
            GenSpec::Planted(p) | GenSpec::Bounded(p, _) => p,
        }
    }

    pub fn build(&self, size: usize, seed: Seed) -> Result<Instance> {
        let pattern = builtin_pattern(self.pattern_name()).expect("validated when parsed");
        match self {
            GenSpec::P5 => gen_p5_family((size.saturating_sub(3) / 2).max(1)),
            GenSpec::Planted(_) => {
                let m = (size / 10).max(1);
                gen_planted_union(&pattern, m, size.saturating_sub(m * pattern.n()))
            }
            GenSpec::Bounded(_, cap) => {
                gen_bounded_degree_planted(&pattern, size, *cap, size / 10, seed)
            }
            GenSpec::Tree => Ok(Instance {
                generator: "tree".into(),
                params: json!({ "n": size, "seed": seed.0 }),
                graph: gen_random_tree(size, seed),
                pattern,
                certificate: None,
            }),
        }
    }
}

fn run_trials<T, F>(jobs: usize, trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Generation(format!("thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub eps: f64,
    pub reps: u64,
    pub trials: u64,
    pub seed: Seed,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: u64,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub queries_per_trial: u64,
    #[serde(skip)]
    pub seed_base: Option<Seed>,
    #[serde(skip)]
    pub wall_time: Duration,
    /// Per trial, the iteration that found a copy.
    #[serde(skip)]
    pub witness_iterations: Vec<Option<u64>>,
}

impl TrialReport {
    fn from_outcomes(
        seed: Seed,
        outcomes: Vec<(Option<u64>, u64)>,
        wall_time: Duration,
    ) -> Result<Self> {
        let trials = outcomes.len() as u64;
        let mut queries: Vec<u64> = outcomes.iter().map(|o| o.1).collect();
        queries.sort_unstable();
        queries.dedup();
        if queries.len() > 1 {
            return Err(Error::NonConstantQueries(queries));
        }
        let rejections = outcomes.iter().filter(|o| o.0.is_some()).count() as u64;
        let (ci_low, ci_high) = wilson_interval(rejections, trials, WILSON_Z99);
        Ok(TrialReport {
            trials,
            rejections,
            rejection_rate: if trials == 0 {
                0.0
            } else {
                rejections as f64 / trials as f64
            },
            ci_low,
            ci_high,
            queries_per_trial: queries.first().copied().unwrap_or(0),
            seed_base: Some(seed),
            wall_time,
            witness_iterations: outcomes.into_iter().map(|o| o.0).collect(),
        })
    }

    /// Rejection count a run with only `reps` repetitions would have seen
    /// on the same seeds.
    pub fn rejections_within(&self, reps: u64) -> u64 {
        self.witness_iterations
            .iter()
            .filter(|w| w.is_some_and(|i| i < reps))
            .count() as u64
    }
}

/// Runs the tester `trials` times with derived seeds. Every witness is
/// re-validated against the host.
pub fn estimate_rejection(
    graph: &Graph,
    pattern: &Graph,
    cfg: &TrialConfig,
) -> Result<TrialReport> {
    if cfg.trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let started = Instant::now();
    let outcomes = run_trials(cfg.jobs, cfg.trials, |i| {
        let mut oracle = GraphOracle::new(graph, cfg.seed.derive(i));
        let v = test_h_freeness(&mut oracle, pattern, cfg.eps, cfg.reps)?;
        if let Some(w) = &v.witness {
            if !w.validate(pattern, graph) {
                return Err(Error::BoundViolated {
                    stage: "tester".into(),
                    detail: format!("witness {:?} is not a copy", w.image()),
                });
            }
        }
        Ok((v.witness_iteration, v.log.total()))
    })?;
    TrialReport::from_outcomes(cfg.seed, outcomes, started.elapsed())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Smallest repetition count meeting the target, if any up to the cap.
    pub reps: Option<u64>,
    /// Rejection rate for `1..=max_reps` repetitions on the same seeds.
    pub rates: Vec<f64>,
}

/// Smallest repetition count whose rejection rate over `trials` runs is at
/// least `target`. One pass at `max_reps` suffices: the first `r`
/// iterations of a run do not depend on the repetition count.
pub fn calibrate_reps(
    graph: &Graph,
    pattern: &Graph,
    target: f64,
    max_reps: u64,
    cfg: &TrialConfig,
) -> Result<Calibration> {
    let report = estimate_rejection(
        graph,
        pattern,
        &TrialConfig {
            reps: max_reps,
            ..*cfg
        },
    )?;
    let rates: Vec<f64> = (1..=max_reps)
        .map(|r| report.rejections_within(r) as f64 / report.trials as f64)
        .collect();
    let reps = rates
        .iter()
        .position(|&r| r >= target)
        .map(|i| i as u64 + 1);
    Ok(Calibration { reps, rates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub n: usize,
    pub queries: u64,
    pub reject_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Builds the family at each size and estimates the rejection rate with a
/// fixed repetition count. Fails if the per-trial query count differs
/// between sizes.
pub fn query_sweep(spec: &GenSpec, sizes: &[usize], cfg: &TrialConfig) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() {
        return Err(Error::Precondition("no sizes given".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let inst = spec.build(size, cfg.seed)?;
        let rep = estimate_rejection(&inst.graph, &inst.pattern, cfg)?;
        rows.push(SweepRow {
            size,
            n: inst.graph.n(),
            queries: rep.queries_per_trial,
            reject_rate: rep.rejection_rate,
            ci_low: rep.ci_low,
            ci_high: rep.ci_high,
        });
    }
    let mut q: Vec<u64> = rows.iter().map(|r| r.queries).collect();
    q.dedup();
    if q.len() > 1 {
        return Err(Error::NonConstantQueries(
            rows.iter().map(|r| r.queries).collect(),
        ));
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "size,queries,reject_rate,ci_low,ci_high";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            r.size, r.queries, r.reject_rate, r.ci_low, r.ci_high
        ));
    }
    out
}

/// The versioned JSON report for one rejection estimate.
pub fn rejection_report_json(
    inst: &Instance,
    pattern_name: &str,
    eps: f64,
    reps: u64,
    report: &TrialReport,
    seed: Seed,
) -> Value {
    let shape = TesterShape::of(&inst.pattern);
    json!({
        "schema": 1,
        "instance": inst.summary(eps),
        "tester": {
            "pattern": pattern_name,
            "n_reps": reps,
            "depth": shape.depth,
            "breadth": shape.breadth,
        },
        "results": report,
        "seed": seed.0,
    })
}

fn explored_contains(explored: &ExploredSubgraph, edges: &[(Vertex, Vertex)]) -> bool {
    edges.iter().all(|&(u, v)| explored.contains_edge(u, v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// Frequency of the target on the whole host.
    pub p_hat: f64,
    /// Frequency of the target on the copy subgraph.
    pub q_hat: f64,
    /// `c^(d^t + 1)`.
    pub factor: f64,
    pub sigma: f64,
    pub trials: u64,
    pub holds: bool,
}

fn transfer_setup(
    g: &Graph,
    copies: &CopySet,
    c: f64,
    target: &[(Vertex, Vertex)],
) -> Result<(crate::graph::CopyGraph, Vec<(Vertex, Vertex)>)> {
    if !is_degree_preserving(g, copies, c) {
        return Err(Error::Precondition(format!(
            "G[copies] is not {c}-degree preserving"
        )));
    }
    let cg = induced_edge_subgraph(copies);
    let local = target
        .iter()
        .map(|&(u, v)| match (cg.local(u), cg.local(v)) {
            (Some(a), Some(b)) if cg.graph.has_edge(a, b) => Ok((a, b)),
            _ => Err(Error::Precondition(format!(
                "target edge ({u}, {v}) is not in G[copies]"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cg, local))
}

fn transfer_factor(c: f64, depth: u32, breadth: u32) -> f64 {
    c.powf((breadth as f64).powi(depth as i32) + 1.0)
}

/// Estimates how often a bounded BFS returns every edge of `target` on
/// `G[copies]` and on `g`, and checks `p >= c^(d^t+1) q - 3 sigma`.
#[allow(clippy::too_many_arguments)]
pub fn verify_probability_transfer(
    g: &Graph,
    copies: &CopySet,
    c: f64,
    depth: u32,
    breadth: u32,
    target: &[(Vertex, Vertex)],
    trials: u64,
    seed: Seed,
    jobs: usize,
) -> Result<TransferReport> {
    let (cg, local) = transfer_setup(g, copies, c, target)?;
    let hits = |host: &Graph, edges: &[(Vertex, Vertex)], s: Seed| -> Result<u64> {
        Ok(run_trials(jobs, trials, |i| {
            let mut o = GraphOracle::new(host, s.derive(i));
            Ok(explored_contains(&random_bounded_bfs(&mut o, depth, breadth)?, edges) as u64)
        })?
        .into_iter()
        .sum())
    };
    let n = trials as f64;
    let p_hat = hits(g, target, seed.derive(u64::MAX))? as f64 / n;
    let q_hat = hits(&cg.graph, &local, seed.derive(u64::MAX - 1))? as f64 / n;
    let factor = transfer_factor(c, depth, breadth);
    let sigma = (p_hat * (1.0 - p_hat) / n + factor * factor * q_hat * (1.0 - q_hat) / n).sqrt();
    Ok(TransferReport {
        p_hat,
        q_hat,
        factor,
        sigma,
        trials,
        holds: p_hat >= factor * q_hat - 3.0 * sigma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactTransfer {
    pub p: f64,
    pub q: f64,
    pub factor: f64,
    pub holds: bool,
}

/// Exact counterpart of [`verify_probability_transfer`] on tiny hosts,
/// using the full probability tree.
pub fn verify_probability_transfer_exact(
    g: &Graph,
    copies: &CopySet,
    c: f64,
    depth: u32,
    breadth: u32,
    target: &[(Vertex, Vertex)],
) -> Result<ExactTransfer> {
    let (cg, local) = transfer_setup(g, copies, c, target)?;
    fn contains_all(edges: &[(Vertex, Vertex)], out: &[(Vertex, Vertex)]) -> bool {
        edges
            .iter()
            .all(|&(u, v)| out.contains(&(u.min(v), u.max(v))))
    }
    let p = bfs_event_probability(g, depth as usize, breadth as usize, |out| {
        contains_all(target, out)
    });
    let q = bfs_event_probability(&cg.graph, depth as usize, breadth as usize, |out| {
        contains_all(&local, out)
    });
    let factor = transfer_factor(c, depth, breadth);
    Ok(ExactTransfer {
        p,
        q,
        factor,
        holds: p >= factor * q - 1e-12,
    })
}

/// Hits over conditioning events.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: u64,
    pub conditioned: u64,
}

impl Ratio {
    pub fn rate(&self) -> f64 {
        if self.conditioned == 0 {
            0.0
        } else {
            self.hits as f64 / self.conditioned as f64
        }
    }

    fn add(&mut self, other: Ratio) {
        self.hits += other.hits;
        self.conditioned += other.conditioned;
    }

    fn record(&mut self, hit: bool) {
        self.conditioned += 1;
        self.hits += hit as u64;
    }
}

/// Per-step event frequencies of bounded BFS runs on `G[copies]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventFrequencies {
    /// After an inner vertex image is found, the next round returns the
    /// images of all its pattern neighbors.
    pub neighborhood: Ratio,
    /// After a source image is found, the next round enters each adjacent
    /// part through an edge to an inner vertex of that part.
    pub source_entry: Ratio,
    /// After an inner vertex image of part `F` is found at step `n`, the
    /// whole part with its adjacent sources is returned by step `n + |F|`.
    pub part_capture: Ratio,
    /// Starting on an inner vertex image of component `C`, the output holds
    /// a copy of `C` in which every host vertex plays its own role.
    pub component_capture: Ratio,
}

impl EventFrequencies {
    fn add(&mut self, o: &EventFrequencies) {
        self.neighborhood.add(o.neighborhood);
        self.source_entry.add(o.source_entry);
        self.part_capture.add(o.part_capture);
        self.component_capture.add(o.component_capture);
    }
}

/// Runs `trials` bounded BFS calls (depth `|H|`, breadth `Δ(H)`) on the
/// copy subgraph of a layered set and counts the per-step events, with the
/// vertex ordering taken from the layers.
pub fn layered_event_frequencies(
    layered: &LayeredCopies,
    trials: u64,
    seed: Seed,
    jobs: usize,
) -> Result<EventFrequencies> {
    let pattern = layered.pattern();
    let decomp = decompose_sources_parts(pattern, &layered.color_of_level())?;
    let cg = layered.copy_graph();
    let host = &cg.graph;
    let depth = pattern.n() as u32;
    let breadth = pattern.max_degree() as u32;
    let part_of: HashMap<Vertex, usize> = decomp
        .parts
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.iter().map(move |&x| (x, i)))
        .collect();
    let components = pattern.components();
    let component_graphs: Vec<Graph> = components
        .iter()
        .map(|c| pattern.induced_subgraph(c))
        .collect();
    let comp_of: HashMap<Vertex, usize> = components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&x| (x, i)))
        .collect();
    let role = |local: Vertex| layered.role(cg.host(local)).expect("copy vertex");
    let copy_of = |local: Vertex| -> &PatternCopy {
        let i = layered.copies_at(cg.host(local))[0];
        &layered.copies().copies()[i]
    };
    let local_of = |h: Vertex| cg.local(h).expect("copy vertex");

    let per_trial = run_trials(jobs, trials, |i| {
        let mut o = GraphOracle::new(host, seed.derive(i));
        let ex = random_bounded_bfs(&mut o, depth, breadth)?;
        let rounds: HashMap<(Vertex, Vertex), u32> =
            ex.edges_with_round().iter().copied().collect();
        let found_by = |u: Vertex, v: Vertex, round: u32| {
            rounds
                .get(&(u.min(v), u.max(v)))
                .is_some_and(|&r| r <= round)
        };
        let mut explored_adj: HashMap<Vertex, Vec<(Vertex, u32)>> = HashMap::new();
        for &((u, v), r) in ex.edges_with_round() {
            explored_adj.entry(u).or_default().push((v, r));
            explored_adj.entry(v).or_default().push((u, r));
        }
        let mut f = EventFrequencies::default();
        for &(x, step) in ex.discovery_steps() {
            let r = role(x);
            if decomp.is_source[r] {
                if step < depth {
                    for p in decomp.parts_at(r) {
                        let hit = explored_adj.get(&x).is_some_and(|ys| {
                            ys.iter()
                                .any(|&(y, r)| r <= step + 1 && part_of.get(&role(y)) == Some(&p))
                        });
                        f.source_entry.record(hit);
                    }
                }
                continue;
            }
            let h = copy_of(x);
            if step < depth {
                let hit = pattern
                    .neighbors(r)
                    .iter()
                    .all(|&y| found_by(x, local_of(h.get(y)), step + 1));
                f.neighborhood.record(hit);
            }
            let part = part_of[&r];
            let size = decomp.parts[part].len() as u32;
            if step + size <= depth {
                let hit = decomp.parts[part].iter().all(|&a| {
                    pattern
                        .neighbors(a)
                        .iter()
                        .all(|&b| found_by(local_of(h.get(a)), local_of(h.get(b)), step + size))
                });
                f.part_capture.record(hit);
            }
        }
        if let Some(start) = ex.start() {
            let r = role(start);
            if !decomp.is_source[r] {
                let comp = comp_of[&r];
                // compact relabeling of the explored vertices
                let verts = ex.vertices();
                let idx: HashMap<Vertex, usize> =
                    verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
                let small =
                    Graph::from_edges(verts.len(), ex.edges().map(|(u, v)| (idx[&u], idx[&v])))?;
                let comp_vertices = &components[comp];
                let hit =
                    find_copy_where(&small, &component_graphs[comp], &EdgeSet::new(), |x, v| {
                        role(verts[v]) == comp_vertices[x]
                    })
                    .is_some();
                f.component_capture.record(hit);
            }
        }
        Ok(f)
    })?;
    let mut total = EventFrequencies::default();
    for f in &per_trial {
        total.add(f);
    }
    Ok(total)
}

/// Shuffled copy of `0..n`, for randomized orderings in tests and tools.
pub fn shuffled_range(n: usize, seed: Seed) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut seed.rng());
    v
}

/// Summary counts of a graph, keyed for JSON output.
pub fn graph_stats(g: &Graph) -> BTreeMap<&'static str, usize> {
    BTreeMap::from([
        ("n", g.n()),
        ("m", g.edge_count()),
        ("max_degree", g.max_degree()),
        ("degeneracy", crate::graph::degeneracy(g).0),
        ("components", g.components().len()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_family_shapes() {
        let i1 = gen_p5_family(1).unwrap();
        assert_eq!((i1.graph.n(), i1.graph.edge_count()), (5, 4));
        let i2 = gen_p5_family(2).unwrap();
        assert_eq!((i2.graph.n(), i2.graph.edge_count()), (7, 8));
        assert!(i2.certificate.as_ref().unwrap().check_edge_disjoint());
        assert!(gen_p5_family(0).is_err());
    }

    #[test]
    fn p5_certificate_threshold() {
        for k in [1, 2, 5, 50] {
            let inst = gen_p5_family(k).unwrap();
            let bound = k as f64 / (2 * k + 3) as f64;
            assert!(inst.certifies(bound * 0.999));
            assert!(!inst.certifies(bound));
        }
    }

    #[test]
    fn planted_union_examples() {
        let t = gen_planted_union(&Graph::complete(3), 100, 0).unwrap();
        assert_eq!(t.graph.n(), 300);
        assert!(t.certifies(0.333) && !t.certifies(1.0 / 3.0));
        let p = gen_planted_union(&Graph::path(5), 50, 250).unwrap();
        assert_eq!(p.graph.n(), 500);
        assert!(p.certifies(0.0999) && !p.certifies(0.1));
    }

    #[test]
    fn bounded_degree_generator() {
        let tri = Graph::complete(3);
        let a = gen_bounded_degree_planted(&tri, 1000, 5, 100, Seed(4)).unwrap();
        assert!(a.graph.max_degree() <= 5);
        assert!(a.certificate.as_ref().unwrap().validate(&a.graph));
        assert!(a.certificate.as_ref().unwrap().check_edge_disjoint());
        assert!(a.certifies(0.0999));
        let b = gen_bounded_degree_planted(&tri, 1000, 5, 100, Seed(4)).unwrap();
        assert_eq!(a.graph.to_text(), b.graph.to_text());
        assert!(gen_bounded_degree_planted(&tri, 10, 1, 1, Seed(0)).is_err());
    }

    #[test]
    fn shared_sources_are_uniform_and_disjoint() {
        let inst = gen_shared_sources(&Graph::path(5), &[0, 2, 4, 1, 3], 12, 2, Seed(9)).unwrap();
        let set = inst.certificate.as_ref().unwrap();
        assert!(set.validate(&inst.graph));
        assert!(set.check_edge_disjoint());
        assert!(set.check_uniformly_colored());
        // three source pools of two vertices, two fresh vertices per copy
        assert_eq!(inst.graph.n(), 6 + 24);
    }

    #[test]
    fn bounded_trees_respect_cap() {
        for s in 0..20 {
            let t = gen_random_bounded_tree(200, 3, Seed(s));
            assert_eq!(t.edge_count(), 199);
            assert!(t.max_degree() <= 3);
            assert_eq!(t.components().len(), 1);
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(750, 1000, WILSON_Z99);
        assert!(lo < 0.75 && hi > 0.75);
        assert!((lo - 0.7134).abs() < 1e-3, "{lo}");
        assert_eq!(wilson_interval(0, 10, WILSON_Z99).0, 0.0);
    }

    #[test]
    fn genspec_round_trip() {
        for s in ["p5", "tree", "planted:triangle", "bounded:c4:6"] {
            assert_eq!(s.parse::<GenSpec>().unwrap().to_string(), s);
        }
        assert!("planted:k9".parse::<GenSpec>().is_err());
        assert!("nope".parse::<GenSpec>().is_err());
    }

    #[test]
    fn tree_instance_is_never_rejected() {
        let g = gen_random_tree(300, Seed(3));
        let cfg = TrialConfig {
            eps: 0.1,
            reps: 3,
            trials: 200,
            seed: Seed(1),
            jobs: 2,
        };
        let r = estimate_rejection(&g, &Graph::complete(3), &cfg).unwrap();
        assert_eq!(r.rejections, 0);
        assert_eq!(r.queries_per_trial, 3 * (bfs_total(3, 2) + 1));
    }

    fn bfs_total(t: u32, d: u32) -> u64 {
        crate::tester::bfs_query_budget(t, d)
    }

    #[test]
    fn report_is_independent_of_workers() {
        let inst = gen_p5_family(20).unwrap();
        let cfg = |jobs| TrialConfig {
            eps: 0.1,
            reps: 2,
            trials: 300,
            seed: Seed(11),
            jobs,
        };
        let a = estimate_rejection(&inst.graph, &inst.pattern, &cfg(1)).unwrap();
        let b = estimate_rejection(&inst.graph, &inst.pattern, &cfg(4)).unwrap();
        assert_eq!(a.witness_iterations, b.witness_iterations);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn prefix_rejections_match_shorter_runs() {
        let inst = gen_p5_family(30).unwrap();
        let base = TrialConfig {
            eps: 0.1,
            reps: 6,
            trials: 200,
            seed: Seed(5),
            jobs: 0,
        };
        let long = estimate_rejection(&inst.graph, &inst.pattern, &base).unwrap();
        for r in [1, 3] {
            let short =
                estimate_rejection(&inst.graph, &inst.pattern, &TrialConfig { reps: r, ..base })
                    .unwrap();
            assert_eq!(short.rejections, long.rejections_within(r));
        }
    }

    #[test]
    fn exact_transfer_on_path_of_three() {
        let g = Graph::path(3);
        let copies = CopySet::from_copies(Graph::path(2), vec![PatternCopy::new(vec![0, 1])]);
        let r = verify_probability_transfer_exact(&g, &copies, 0.5, 1, 1, &[(0, 1)]).unwrap();
        assert!((r.q - 1.0).abs() < 1e-12);
        assert!((r.p - 0.5).abs() < 1e-12);
        assert!((r.factor - 0.25).abs() < 1e-12);
        assert!(r.holds);
        assert!(verify_probability_transfer_exact(&g, &copies, 0.9, 1, 1, &[(0, 1)]).is_err());
    }
}
