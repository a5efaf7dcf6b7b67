mod common;

use std::collections::HashSet;

use htest_core::experiments::{
    gen_p5_family, gen_planted_union, gen_shared_sources, layered_event_frequencies,
};
use htest_core::graph::{degeneracy, induced_edge_subgraph, CopySet, Graph, PatternCopy};
use htest_core::oracle::Seed;
use htest_core::pipeline::{
    all_component_constructions, assemble_copy, decompose_sources_parts, degree_preserving_prune,
    is_degree_preserving, pairwise_compatible, reduce_to_layered, uniform_coloring_extract,
    uniformly_layered_extract, LayeredCopies, PartCopy, PipelineOptions, PipelineOrder,
};
use htest_core::sparsity::{tree_embedding, TreeOrder};
use htest_core::Error;

#[test]
fn apex_copies_are_pruned() {
    let (g, copies) = common::apex_instance(5, 300, 1000);
    let alpha = copies.len() as f64 / g.n() as f64;
    let d = degeneracy(&g).0;
    assert_eq!(d, 2);
    let (kept, report) = degree_preserving_prune(&g, &copies, alpha, d).unwrap();
    assert_eq!(report.removed_at.first(), Some(&0));
    assert_eq!(kept.len(), 1000);
    assert!(kept.iter().all(|c| !c.contains(0)));
    assert!(is_degree_preserving(&g, &kept, report.c));
    assert!(kept.len() as f64 >= alpha * g.n() as f64 / 2.0);
    assert!(report.vertices_kept as f64 >= alpha * g.n() as f64 / (4.0 * d as f64));
}

#[test]
fn planted_p5_copies_survive_pruning() {
    let inst = gen_p5_family(50).unwrap();
    let copies = inst.certificate.unwrap();
    let alpha = copies.len() as f64 / inst.graph.n() as f64;
    let (kept, _) = degree_preserving_prune(&inst.graph, &copies, alpha, 2).unwrap();
    assert_eq!(kept, copies);
}

#[test]
fn two_level_tuples_keep_the_larger_bucket() {
    // six triangles hang below their first vertex, four below their second
    let tri = Graph::complete(3);
    let mut copies = Vec::new();
    let mut parents = Vec::new();
    for i in 0..10 {
        let b = 3 * i;
        copies.push(PatternCopy::new(vec![b, b + 1, b + 2]));
        if i < 6 {
            parents.extend([None, Some(b), Some(b + 1)]);
        } else {
            parents.extend([Some(b + 1), None, Some(b)]);
        }
    }
    let edges: Vec<_> = copies
        .iter()
        .flat_map(|c| c.host_edges(&tri).collect::<Vec<_>>())
        .collect();
    let g = Graph::from_edges(30, edges).unwrap();
    let set = CopySet::from_copies(tri, copies)
        .flag_edge_disjoint()
        .flag_uniformly_colored();
    let cg = induced_edge_subgraph(&set);
    let local_parents: Vec<_> = (0..cg.graph.n())
        .map(|i| parents[cg.host(i)].map(|p| cg.local(p).unwrap()))
        .collect();
    let embedding = TreeOrder::from_parents(local_parents).unwrap();
    let out = uniformly_layered_extract(&set, &embedding).unwrap();
    assert_eq!(out.bucketing.bucket_sizes, vec![6, 4]);
    assert_eq!(out.layered.copies().len(), 6);
    assert_eq!(out.layered.color_of_level(), vec![0, 1, 2]);
    assert!(out.layered.validate(&g));
}

#[test]
fn p5_family_reduces_to_five_layers() {
    for k in [10, 100] {
        let inst = gen_p5_family(k).unwrap();
        let out = reduce_to_layered(&inst.graph, &inst.pattern, 0.1, &PipelineOptions::default())
            .unwrap();
        let layered = out.layered.unwrap();
        assert_eq!(layered.copies().len(), k);
        assert_eq!(layered.depth(), 5);
        assert!(layered.validate(&inst.graph));
        assert!(out.stages.iter().all(|s| s.holds));
    }
}

#[test]
fn stages_only_drop_copies() {
    for order in [PipelineOrder::Layered, PipelineOrder::ColorRestrict] {
        let inst = gen_planted_union(&Graph::complete(3), 12, 5).unwrap();
        let opts = PipelineOptions {
            order,
            ..PipelineOptions::default()
        };
        let out = reduce_to_layered(&inst.graph, &inst.pattern, 0.2, &opts).unwrap();
        let planted: HashSet<_> = inst.certificate.unwrap().iter().cloned().collect();
        assert_eq!(out.copies.len(), 12);
        assert!(out.copies.iter().all(|c| planted.contains(c)));
        assert!(out.copies.check_edge_disjoint());
        assert!(out.stages.windows(2).all(|w| w[1].input == w[0].output));
    }
}

#[test]
fn single_copy_passes_through() {
    let p = Graph::path(4);
    let out = reduce_to_layered(&p, &p, 0.2, &PipelineOptions::default()).unwrap();
    assert_eq!(out.copies.len(), 1);
    assert!(out.copies.copies()[0].validate(&p, &p));
}

#[test]
fn sources_are_independent() {
    let mut rng = Seed(3).rng();
    for _ in 0..500 {
        let k = 2 + (rand::Rng::random_range(&mut rng, 0..6));
        let h = common::random_connected(k, 3, &mut rng);
        let order = common::random_ordering(k, &mut rng);
        let d = decompose_sources_parts(&h, &order).unwrap();
        for (i, &s) in d.sources.iter().enumerate() {
            for &t in &d.sources[i + 1..] {
                assert!(!h.has_edge(s, t));
            }
        }
        let covered: usize = d.parts.iter().map(Vec::len).sum();
        assert_eq!(covered + d.sources.len(), k);
    }
}

fn layered_shared_sources(
    pattern: &Graph,
    copies: usize,
    pool: usize,
    seed: Seed,
) -> (Graph, LayeredCopies) {
    let mut rng = seed.rng();
    let order = common::random_ordering(pattern.n(), &mut rng);
    let inst = gen_shared_sources(pattern, &order, copies, pool, seed).unwrap();
    let set = inst.certificate.unwrap();
    let cg = induced_edge_subgraph(&set);
    let (embedding, _) = tree_embedding(&cg.graph);
    let out = uniformly_layered_extract(&set, &embedding).unwrap();
    (inst.graph, out.layered)
}

#[test]
fn component_construction_is_sound_on_shared_sources() {
    let mut rng = Seed(5).rng();
    for i in 0..30 {
        let k = 3 + i % 4;
        let h = common::random_connected(k, i % 3, &mut rng);
        let (g, layered) = layered_shared_sources(&h, 6, 2, Seed(i as u64));
        assert!(layered.validate(&g));
        let decomp = decompose_sources_parts(layered.pattern(), &layered.color_of_level()).unwrap();
        for part in 0..decomp.parts.len() {
            for copy in 0..layered.copies().len() {
                for run in
                    all_component_constructions(&layered, &decomp, PartCopy { part, copy }, 100_000)
                {
                    let parts = run.unwrap();
                    assert!(pairwise_compatible(&layered, &decomp, &parts));
                    assert!(assemble_copy(&layered, &decomp, &parts)
                        .unwrap()
                        .validate(layered.pattern(), &g));
                }
            }
        }
    }
}

#[test]
fn incompatible_parts_are_rejected() {
    let p5 = Graph::path(5);
    let inst = gen_p5_family(3).unwrap();
    let out = reduce_to_layered(&inst.graph, &p5, 0.1, &PipelineOptions::default()).unwrap();
    let layered = out.layered.unwrap();
    let decomp = decompose_sources_parts(&p5, &layered.color_of_level()).unwrap();
    // the same part twice cannot assemble
    let parts = [PartCopy { part: 0, copy: 0 }, PartCopy { part: 0, copy: 1 }];
    assert!(assemble_copy(&layered, &decomp, &parts).is_err());
}

#[test]
fn event_frequencies_do_not_decay_with_size() {
    let freq = |k: usize| {
        // start from the planted copies; greedy extraction is quadratic on this family
        let set = gen_p5_family(k).unwrap().certificate.unwrap();
        let (uniform, _) = uniform_coloring_extract(&set, 1_000_000, Seed(0)).unwrap();
        let (embedding, _) = tree_embedding(&induced_edge_subgraph(&uniform).graph);
        let layered = uniformly_layered_extract(&uniform, &embedding)
            .unwrap()
            .layered;
        assert_eq!(layered.copies().len(), k);
        layered_event_frequencies(&layered, 20_000, Seed(k as u64), 0).unwrap()
    };
    let small = freq(100);
    let large = freq(10_000);
    for (name, s, l) in [
        ("neighborhood", small.neighborhood, large.neighborhood),
        ("source_entry", small.source_entry, large.source_entry),
        ("part_capture", small.part_capture, large.part_capture),
        (
            "component_capture",
            small.component_capture,
            large.component_capture,
        ),
    ] {
        assert!(
            s.conditioned > 1000 && l.conditioned > 1000,
            "{name}: too few samples"
        );
        assert!(s.rate() > 0.0, "{name}: zero frequency");
        assert!(
            l.rate() >= 0.9 * s.rate(),
            "{name}: {} at 10^4 vs {} at 10^2",
            l.rate(),
            s.rate()
        );
    }
}

#[test]
fn prune_rejects_understated_degeneracy() {
    let (g, copies) = common::apex_instance(2, 3, 2);
    assert!(matches!(
        degree_preserving_prune(&g, &copies, 0.1, 1),
        Err(Error::Precondition(_))
    ));
}
