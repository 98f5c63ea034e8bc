//! Cross-module property tests: invariants that span more
//! than one subsystem.

mod common;

use std::collections::BTreeSet;

use duality_core::digraph::Digraph;
use duality_core::extract::{choosable_routing, ChoosableOutcome};
use duality_core::linkage::{check_well_linked, menger, Linkage, WELL_LINKED_CAP};
#[allow(unused_imports)]
use duality_core::pos::Cluster;
use duality_core::pos::{
    merge_pools, slice_grid_to_pools, verify_path_of_sets, Flavor, PathOfSets,
};
use duality_core::temporal::{
    check_h_routing, check_lifting, covering_walk_strong, HRouting, Host, Pattern, TemporalDigraph,
};
use duality_core::testutil;
use proptest::prelude::*;

fn repeat_layers(d: &Digraph, times: usize) -> TemporalDigraph {
    TemporalDigraph::new(d.n(), vec![d.arcs().collect(); times])
}

#[test]
fn lifting_guarantee_on_seeded_instances() {
    // Whenever a bijection routes every layer and the lifetime reaches the
    // vertex count, the temporal verdict must hold, for paths and cliques
    // of order up to 4.
    for seed in 0..60u64 {
        for k in 2..=4usize {
            let d = testutil::random_strongly_connected(seed, k + 2, 350);
            let t = repeat_layers(&d, k + 3);
            for pattern in [Pattern::Path(k), Pattern::BidirectedClique(k)] {
                let map: Vec<u32> = (0..k as u32).collect();
                let routing = HRouting::new(pattern, map).unwrap();
                let report = check_lifting(&t, &routing).unwrap();
                assert!(report.implication_holds, "seed {seed} k {k} {pattern:?}");
            }
        }
    }
}

/// A direct path of well-linked sets: each cluster a bidirected clique on 6
/// fresh vertices with 2-element terminal sets, joined by direct links.
fn clique_pows(length: usize) -> PathOfSets {
    use duality_core::digraph::SubDigraph;
    use duality_core::pos::Cluster;
    let mut clusters = Vec::new();
    let mut links = Vec::new();
    let cluster_base = |i: usize| (i * 8) as u32;
    for i in 0..=length {
        let base = cluster_base(i);
        let verts: Vec<u32> = (base..base + 6).collect();
        let arcs: Vec<(u32, u32)> = verts
            .iter()
            .flat_map(|&u| verts.iter().map(move |&v| (u, v)))
            .filter(|(u, v)| u != v)
            .collect();
        clusters.push(Cluster {
            sub: SubDigraph::new(verts.iter().copied(), arcs),
            a: vec![base, base + 1],
            b: vec![base + 2, base + 3],
        });
        if i < length {
            let next = cluster_base(i + 1);
            links.push(
                Linkage::new(vec![
                    vec![base + 2, base + 6, next],
                    vec![base + 3, base + 7, next + 1],
                ])
                .unwrap(),
            );
        }
    }
    PathOfSets {
        n: (length + 1) * 8,
        clusters,
        links,
        flavor: Flavor::WellLinked,
        uniform: false,
        strict: false,
    }
}

#[test]
fn pows_internal_routing_is_well_linked() {
    // In a verified path of well-linked sets, every ordered terminal pair of
    // clusters i < j is well-linked within the sub-path [i, j].
    let pows = {
        let mut p = clique_pows(3);
        // Link vertices need arcs in the union digraph only.
        p.strict = false;
        p
    };
    assert!(verify_path_of_sets(&pows).unwrap().ok);
    assert!(pows.width() <= 4 && pows.length() <= 3);
    for i in 0..pows.clusters.len() {
        for j in (i + 1)..pows.clusters.len() {
            let sub = pows.slice(i, j);
            let d = sub.to_digraph();
            for a_side in [&pows.clusters[i].a, &pows.clusters[i].b] {
                for b_side in [&pows.clusters[j].a, &pows.clusters[j].b] {
                    let a: BTreeSet<u32> = a_side.iter().copied().collect();
                    let b: BTreeSet<u32> = b_side.iter().copied().collect();
                    let rep = check_well_linked(&d, &a, &b, WELL_LINKED_CAP).unwrap();
                    assert!(rep.well_linked, "pair ({i},{j}): {:?}", rep.counterexample);
                }
            }
        }
    }
}

#[test]
fn folded_conversion_reaches_length_two() {
    // A split with six stitched verticals supports windows for a width-1,
    // length-2 path of well-linked sets.
    let (host, split) = testutil::fixtures::well_linked_split(6, 3);
    let folded = duality_core::gridweb::split_to_folded_web(&host, &split).unwrap();
    let (pows, _) = duality_core::pos::web_to_path_of_sets(
        &host,
        &folded,
        1,
        2,
        duality_core::pos::WebWant::Pows,
    )
    .unwrap();
    assert_eq!(pows.width(), 1);
    assert_eq!(pows.length(), 2);
    assert!(verify_path_of_sets(&pows).unwrap().ok);
}

#[test]
fn merge_pools_order_linkedness_brute_force() {
    // Merged clusters pass the brute-force order-linkedness at degree c * r
    // for widths up to 3 and c up to 3.
    for w in 2..=3usize {
        for c in 2..=3usize {
            let cols = 2 * c * 2; // two merged clusters
            let (_, pools) = slice_grid_to_pools(w, cols, 2).unwrap();
            let merged = merge_pools(&pools, c).unwrap();
            assert_eq!(merged.flavor, Flavor::OrderLinked(c));
            let check = verify_path_of_sets(&merged).unwrap();
            assert!(check.ok, "w {w} c {c}: {:?}", check.violated);
        }
    }
}

#[test]
fn choosable_p_case_anchoring_seeded() {
    for seed in 0..30u64 {
        let d = testutil::random_strongly_connected(seed, 5, 300);
        let t = repeat_layers(&d, 20);
        let s: BTreeSet<u32> = (0..4u32).collect();
        let Ok(w) = covering_walk_strong(&t, &s, 0, 3) else {
            continue;
        };
        let Ok(out) = choosable_routing(&t, &w, &s, 2, 3) else {
            continue;
        };
        if let ChoosableOutcome::PathAnchored { w_b, routing, .. } = out {
            assert_eq!(w_b.start(), routing.map[0], "seed {seed}");
            assert_eq!(w_b.end(), *routing.map.last().unwrap(), "seed {seed}");
        }
    }
}

#[test]
fn web_extras_forward_linkage_contracts() {
    let (host, seg) = testutil::fixtures::well_linked_segmentation(2, 12);
    let (pows, extras) =
        duality_core::pos::web_to_path_of_sets(&host, &seg, 1, 1, duality_core::pos::WebWant::Pows)
            .unwrap();
    // The middle piece connects A(S_0) to B(S_ell); prefix and suffix stay
    // internally off the path of sets.
    let a0: BTreeSet<u32> = pows.clusters[0].a.iter().copied().collect();
    let bl: BTreeSet<u32> = pows.clusters.last().unwrap().b.iter().copied().collect();
    for p in extras.forward_middle.paths() {
        // The middle linkage spans the pre-merge terminals, which contain
        // the surviving ones.
        assert!(!p.is_empty());
    }
    let pos_vertices: BTreeSet<u32> = pows
        .clusters
        .iter()
        .flat_map(|c| c.sub.vertices.iter().copied())
        .chain(pows.links.iter().flat_map(|l| l.vertex_set()))
        .collect();
    for p in extras.forward_prefix.paths() {
        for &v in &p[..p.len() - 1] {
            assert!(
                !pos_vertices.contains(&v) || a0.contains(&v),
                "prefix interior hits the system"
            );
        }
    }
    for p in extras.forward_suffix.paths() {
        for &v in &p[1..] {
            assert!(
                !pos_vertices.contains(&v) || bl.contains(&v),
                "suffix interior hits the system"
            );
        }
    }
    // The side linkage's verticals contain the entry sets.
    if let Some((side, _)) = &extras.side {
        assert_eq!(side.order(), pows.clusters.len());
    }
}

#[test]
fn menger_is_monotone_under_arc_addition() {
    // Adding arcs never shrinks the maximum linkage order.
    for seed in 0..40u64 {
        let d = testutil::random_digraph(seed, 6, 250);
        let a: BTreeSet<u32> = BTreeSet::from([0, 1]);
        let b: BTreeSet<u32> = BTreeSet::from([4, 5]);
        let before = menger(&d, &a, &b).0.order();
        let mut arcs: Vec<(u32, u32)> = d.arcs().collect();
        arcs.push((2, 3));
        let after = menger(&Digraph::new(6, arcs), &a, &b).0.order();
        assert!(after >= before, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sliced_pools_always_verify(rows in 2usize..4, groups in 2usize..5) {
        let (_, pools) = slice_grid_to_pools(rows, groups * 2, 2).unwrap();
        prop_assert!(verify_path_of_sets(&pools).unwrap().ok);
        let reversed: PathOfSets = pools.reverse();
        // Reversal of an order-linked path of sets swaps terminals and stays
        // structurally intact at the disjointness level.
        prop_assert_eq!(reversed.width(), pools.width());
        prop_assert_eq!(reversed.length(), pools.length());
    }

    #[test]
    fn routing_verifier_rejects_broken_maps(seed in 0u64..80) {
        // A bijection onto isolated vertices can never route a path pattern
        // of size >= 2.
        let d = testutil::random_digraph(seed, 6, 0);
        let routing = HRouting::new(Pattern::Path(2), vec![0, 1]).unwrap();
        prop_assert!(!check_h_routing(Host::Static(&d), &routing).unwrap().ok);
    }

    #[test]
    fn linkage_concat_preserves_disjointness(n in 2usize..6) {
        let first: Vec<Vec<u32>> = (0..n).map(|i| vec![2 * i as u32, 2 * i as u32 + 1]).collect();
        let second: Vec<Vec<u32>> =
            (0..n).map(|i| vec![2 * i as u32 + 1, (2 * n + i) as u32]).collect();
        let a = Linkage::new(first).unwrap();
        let b = Linkage::new(second).unwrap();
        let joined = a.concat(&b).unwrap();
        prop_assert_eq!(joined.order(), n);
        let mut seen = BTreeSet::new();
        for p in joined.paths() {
            for &v in p {
                prop_assert!(seen.insert(v));
            }
        }
    }
}

/// Scattered routing fixtures and the remaining query kinds.
mod pos_queries {

    use duality_core::pos::{pos_linkage, PosQuery, PosRouted, Side};

    #[test]
    fn terminal_query_on_a_pows() {
        let pows = super::clique_pows(1);
        let got = pos_linkage(
            &pows,
            &PosQuery::TerminalToTerminal {
                i: 0,
                side_i: Side::A,
                j: 1,
                side_j: Side::B,
            },
        )
        .unwrap();
        let PosRouted::Linkage(l) = got else { panic!() };
        assert_eq!(l.order(), 2);
        assert!(l.is_valid_in(&pows.to_digraph()));
        assert_eq!(l.start_set(), pows.clusters[0].a.iter().copied().collect());
        assert_eq!(l.end_set(), pows.clusters[1].b.iter().copied().collect());
    }

    #[test]
    fn scattered_sources_route_forward() {
        // Sources in clusters 0 and 2 (gap 2) into A of cluster 4.
        let pows = super::clique_pows(4);
        let x = vec![
            pows.clusters[0]
                .sub
                .vertices
                .iter()
                .copied()
                .nth(4)
                .unwrap(), // a spare vertex
            pows.clusters[2]
                .sub
                .vertices
                .iter()
                .copied()
                .nth(4)
                .unwrap(),
        ];
        let got = pos_linkage(&pows, &PosQuery::ScatteredToA { x: x.clone(), j: 4 }).unwrap();
        let PosRouted::Linkage(l) = got else { panic!() };
        assert_eq!(l.order(), 2);
        let host = pows.to_digraph();
        assert!(l.is_valid_in(&host));
        let starts = l.start_set();
        for v in &x {
            assert!(
                starts.contains(v),
                "scattered source {v} missing from the starts"
            );
        }
        let a4: std::collections::BTreeSet<u32> = pows.clusters[4].a.iter().copied().collect();
        assert!(l.ends().iter().all(|e| a4.contains(e)));

        // Violating the gap condition is refused.
        let too_close = vec![
            pows.clusters[0]
                .sub
                .vertices
                .iter()
                .copied()
                .nth(4)
                .unwrap(),
            pows.clusters[1]
                .sub
                .vertices
                .iter()
                .copied()
                .nth(4)
                .unwrap(),
        ];
        assert!(matches!(
            pos_linkage(&pows, &PosQuery::ScatteredToA { x: too_close, j: 4 }),
            Err(duality_core::Error::InvalidQuery(_))
        ));
        // And so is a source too close to the target cluster.
        let near_target = vec![pows.clusters[3]
            .sub
            .vertices
            .iter()
            .copied()
            .nth(4)
            .unwrap()];
        assert!(matches!(
            pos_linkage(
                &pows,
                &PosQuery::ScatteredToA {
                    x: near_target,
                    j: 4
                }
            ),
            Err(duality_core::Error::InvalidQuery(_))
        ));
    }

    #[test]
    fn scattered_both_sides() {
        let pows = super::clique_pows(4);
        let x = vec![pows.clusters[0]
            .sub
            .vertices
            .iter()
            .copied()
            .nth(4)
            .unwrap()];
        let y = vec![pows.clusters[3]
            .sub
            .vertices
            .iter()
            .copied()
            .nth(5)
            .unwrap()];
        let got = pos_linkage(
            &pows,
            &PosQuery::ScatteredToScattered {
                x: x.clone(),
                y: y.clone(),
            },
        )
        .unwrap();
        let PosRouted::Linkage(l) = got else { panic!() };
        assert_eq!(l.order(), 1);
        assert!(l.is_valid_in(&pows.to_digraph()));
        assert_eq!(l.starts(), x);
        assert_eq!(l.ends(), y);
    }

    #[test]
    fn backward_scattered_targets() {
        let pows = super::clique_pows(4);
        let y = vec![pows.clusters[3]
            .sub
            .vertices
            .iter()
            .copied()
            .nth(4)
            .unwrap()];
        let got = pos_linkage(&pows, &PosQuery::BToScattered { i: 0, y: y.clone() }).unwrap();
        let PosRouted::Linkage(l) = got else { panic!() };
        assert_eq!(l.order(), 1);
        assert!(l.is_valid_in(&pows.to_digraph()));
        assert!(y.contains(&l.ends()[0]));
        assert!(pows.clusters[0].b.contains(&l.starts()[0]));
    }

    #[test]
    fn vertex_augmented_linkage() {
        let pows = super::clique_pows(1);
        let spare = pows.clusters[0]
            .sub
            .vertices
            .iter()
            .copied()
            .nth(4)
            .unwrap();
        let got = pos_linkage(&pows, &PosQuery::VertexAugmented { i: 0, v: spare }).unwrap();
        let PosRouted::Linkage(l) = got else { panic!() };
        assert_eq!(l.order(), 2);
        assert!(l.starts().contains(&spare));
        let b0: std::collections::BTreeSet<u32> = pows.clusters[0].b.iter().copied().collect();
        assert!(l.ends().iter().all(|e| b0.contains(e)));
    }
}

#[test]
fn pows_mode_grid_extraction_is_anchored() {
    let pows = clique_pows(3);
    let got = duality_core::pos::path_of_sets_to_grid(&pows, duality_core::pos::GridMode::Pows, 2)
        .unwrap();
    assert_eq!((got.grid.p.order(), got.grid.q.order()), (2, 2));
    assert!(
        got.anchored,
        "rows must start in A(S_0) and end in B(S_ell)"
    );
    let host = pows.to_digraph();
    assert!(duality_core::gridweb::verify_structure(&host, &got.grid).ok);
}

#[test]
fn pools_to_pows_refuses_short_width() {
    // Width 7 with ell = 3 and w = 2 misses the w(ell + 1) = 8 bound.
    let (_, mut pools) = duality_core::pos::slice_grid_to_pools(7, 8, 2).unwrap();
    pools.flavor = Flavor::OrderLinked(2);
    assert!(matches!(
        duality_core::pos::pools_to_pows(&pools, 2, 3),
        Err(duality_core::Error::InvalidParameter(_))
    ));
}

#[test]
fn well_linked_sublinkage_order_two_through_clique_blocks() {
    // Two chains threaded through repeated connector blocks, each block
    // joining the chains in both directions through private vertices.
    use duality_core::digraph::SubDigraph;
    use duality_core::extract::well_linked_sublinkage;
    let m = 16usize;
    let a = |t: usize| t as u32; // chain 0: ids 0..=m
    let b = |t: usize| (m + 1 + t) as u32; // chain 1
    let base = 2 * (m + 1) as u32;
    let mut arcs: Vec<(u32, u32)> = Vec::new();
    for t in 0..m {
        arcs.push((a(t), a(t + 1)));
        arcs.push((b(t), b(t + 1)));
    }
    let mut blocks = Vec::with_capacity(m + 1);
    for t in 0..=m {
        let c = base + 2 * t as u32;
        let d = c + 1;
        arcs.extend([(a(t), c), (c, b(t)), (b(t), d), (d, a(t))]);
        blocks.push(SubDigraph::new(
            [a(t), b(t), c, d],
            [(a(t), c), (c, b(t)), (b(t), d), (d, a(t))],
        ));
    }
    let n = (base + 2 * (m as u32 + 1)) as usize;
    let host = Digraph::new(n, arcs);
    let chains = Linkage::new(vec![
        (0..=m).map(a).collect::<Vec<_>>(),
        (0..=m).map(b).collect::<Vec<_>>(),
    ])
    .unwrap();
    assert!(chains.is_valid_in(&host));
    let got = well_linked_sublinkage(&chains, &blocks, 2, n).unwrap();
    assert_eq!(got.order(), 2);
    let rep = check_well_linked(&host, &got.start_set(), &got.end_set(), WELL_LINKED_CAP).unwrap();
    assert!(rep.well_linked);
}

#[test]
fn ordered_web_to_pools_from_canonical_grid() {
    // The canonical acyclic grid read as an ordered web (rows over columns)
    // converts into a verified uniform path of order-linked sets with its
    // forward linkage.
    use duality_core::gridweb::{StructureKind, StructureMeta, StructuredPair};
    let (host, grid) = duality_core::gridweb::acyclic_grid(3, 12);
    let web = StructuredPair {
        kind: StructureKind::OrderedWeb,
        p: grid.p.clone(),
        q: grid.q.clone(),
        meta: StructureMeta::default(),
    };
    let (pools, extras) = duality_core::pos::web_to_path_of_sets(
        &host,
        &web,
        2,
        1,
        duality_core::pos::WebWant::Pools,
    )
    .unwrap();
    assert_eq!(pools.width(), 2);
    assert_eq!(pools.length(), 1);
    assert_eq!(pools.flavor, Flavor::OrderLinked(2));
    assert!(pools.uniform);
    assert!(verify_path_of_sets(&pools).unwrap().ok);
    // Forward linkage pieces chain across the system.
    let middle = &extras.forward_middle;
    assert_eq!(middle.order(), 2);
    for (pre, mid) in extras.forward_prefix.paths().iter().zip(middle.paths()) {
        assert_eq!(pre.last(), mid.first());
    }
}

#[test]
fn core_types_are_shareable_across_threads() {
    fn assert_shareable<T: Send + Sync>() {}
    assert_shareable::<Digraph>();
    assert_shareable::<Linkage>();
    assert_shareable::<TemporalDigraph>();
    assert_shareable::<duality_core::temporal::RoutingTemporalDigraph>();
    assert_shareable::<PathOfSets>();
    assert_shareable::<duality_core::gridweb::StructuredPair>();
    assert_shareable::<duality_core::pathsystem::PathSystem>();
    assert_shareable::<duality_core::bounds::BigBound>();
}
