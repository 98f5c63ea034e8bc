//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use duality_core::digraph::Digraph;
use duality_core::linkage::Linkage;
use duality_core::pathsystem::PathSystem;

/// `p` disjoint two-section paths with `ell` in/out terminals and private
/// two-arc pairwise linkages.
pub fn disjoint_system(ell: usize, p: usize) -> (Digraph, PathSystem) {
    let path_v = |i: usize, t: usize| (i * 2 * ell + t) as u32;
    let base = p * 2 * ell;
    let mut arcs = Vec::new();
    let mut paths = Vec::new();
    let mut a_in = Vec::new();
    let mut a_out = Vec::new();
    for i in 0..p {
        let path: Vec<u32> = (0..2 * ell).map(|t| path_v(i, t)).collect();
        arcs.extend(path.windows(2).map(|w| (w[0], w[1])));
        a_in.push(path[..ell].to_vec());
        a_out.push(path[ell..].to_vec());
        paths.push(path);
    }
    let mut links = BTreeMap::new();
    let mut fresh = base as u32;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let mut lp = Vec::with_capacity(ell);
            for t in 0..ell {
                let mid = fresh;
                fresh += 1;
                let from = path_v(i, ell + t);
                let to = path_v(j, t);
                arcs.push((from, mid));
                arcs.push((mid, to));
                lp.push(vec![from, mid, to]);
            }
            links.insert((i, j), Linkage::new(lp).unwrap());
        }
    }
    let host = Digraph::new(fresh as usize, arcs);
    (
        host,
        PathSystem {
            ell,
            paths,
            links,
            a_in,
            a_out,
        },
    )
}

/// A system sized for the local-lemma precheck (3 groups of 11 paths) where
/// one path of the third group rides every linkage between the first two
/// groups, creating genuine resampling events.
pub fn lll_rider_system() -> (Digraph, PathSystem) {
    let (host, mut sys) = disjoint_system(1, 33);
    let rider = 22usize;
    let rider_path = sys.paths[rider].clone();
    let mut arcs: Vec<(u32, u32)> = host.arcs().collect();
    for s in 0..11usize {
        for t in 11..22usize {
            let from = sys.a_out[s][0];
            let to = sys.a_in[t][0];
            // Route through a rider vertex; sharing across linkages is fine.
            let via = rider_path[(s + t) % rider_path.len()];
            arcs.push((from, via));
            arcs.push((via, to));
            sys.links
                .insert((s, t), Linkage::new(vec![vec![from, via, to]]).unwrap());
        }
    }
    (Digraph::new(host.n(), arcs), sys)
}
