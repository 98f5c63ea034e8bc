//! Small enumeration and random-generation helpers shared by tests and the
//! experiment harness.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::digraph::Digraph;

/// Deterministic RNG for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next_permutation
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| cur[i] < cur[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// All `k`-subsets of `items`, lexicographic by position.
pub fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let n = items.len();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i].clone()).collect());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Random digraph with each of the `n(n-1)` possible arcs kept with the given
/// per-mille probability.
pub fn random_digraph(seed: u64, n: usize, density_permille: u32) -> Digraph {
    let mut r = rng(seed);
    let mut arcs = Vec::new();
    for u in 0..n as u32 {
        for v in 0..n as u32 {
            if u != v && r.gen_range(0..1000) < density_permille {
                arcs.push((u, v));
            }
        }
    }
    Digraph::new(n, arcs)
}

/// Random tournament on `n` vertices.
pub fn random_tournament(seed: u64, n: usize) -> Digraph {
    let mut r = rng(seed);
    let mut arcs = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if r.gen_bool(0.5) {
                arcs.push((u, v));
            } else {
                arcs.push((v, u));
            }
        }
    }
    Digraph::new(n, arcs)
}

/// Random strongly connected digraph: a Hamiltonian cycle on a random
/// permutation plus random extra arcs.
pub fn random_strongly_connected(seed: u64, n: usize, extra_permille: u32) -> Digraph {
    let mut r = rng(seed);
    let mut perm: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = r.gen_range(0..=i);
        perm.swap(i, j);
    }
    let mut arcs: Vec<(u32, u32)> = (0..n).map(|i| (perm[i], perm[(i + 1) % n])).collect();
    for u in 0..n as u32 {
        for v in 0..n as u32 {
            if u != v && r.gen_range(0..1000) < extra_permille {
                arcs.push((u, v));
            }
        }
    }
    Digraph::new(n, arcs)
}

/// Crafted structure fixtures shared by unit and acceptance tests.
pub mod fixtures {
    use crate::digraph::Digraph;
    use crate::gridweb::{acyclic_grid, StructureKind, StructureMeta, StructuredPair};
    use crate::linkage::Linkage;

    /// A well-linked `(2p, q)`-split: pieces are downward strokes of a
    /// single cut path, `q` paths cross them in reverse piece order, and a
    /// complete return block links the crossing paths' ends back to their
    /// starts.
    pub fn well_linked_split(p: usize, q: usize) -> (Digraph, StructuredPair) {
        let pieces_n = 2 * p;
        let id = |i: usize, j: usize| (i * q + j) as u32;
        let ret = |t: usize| (pieces_n * q + t) as u32;
        let mut arcs = Vec::new();
        let mut pieces = Vec::with_capacity(pieces_n);
        for i in 0..pieces_n {
            let stroke: Vec<u32> = (0..q).map(|j| id(i, j)).collect();
            arcs.extend(stroke.windows(2).map(|w| (w[0], w[1])));
            pieces.push(stroke);
        }
        let mut cuts = Vec::new();
        for i in 0..pieces_n - 1 {
            let e = (id(i, q - 1), id(i + 1, 0));
            arcs.push(e);
            cuts.push(e);
        }
        let mut qpaths = Vec::with_capacity(q);
        for j in 0..q {
            let row: Vec<u32> = (0..pieces_n).rev().map(|i| id(i, j)).collect();
            arcs.extend(row.windows(2).map(|w| (w[0], w[1])));
            qpaths.push(row);
        }
        // Complete return block: every row end reaches every row start
        // through its own choice of return vertex.
        for j in 0..q {
            for t in 0..q {
                arcs.push((id(0, j), ret(t)));
                arcs.push((ret(t), id(pieces_n - 1, j)));
                if t != j {
                    arcs.push((ret(j), ret(t)));
                }
            }
        }
        let host = Digraph::new(pieces_n * q + q, arcs);
        let q_star = Linkage::new(qpaths.clone()).unwrap();
        let pair = StructuredPair {
            kind: StructureKind::Split,
            p: Linkage::new(pieces).unwrap(),
            q: Linkage::new(qpaths).unwrap(),
            meta: StructureMeta {
                cut_arcs: cuts,
                q_star: Some(q_star),
                well_linked: true,
                ..StructureMeta::default()
            },
        };
        (host, pair)
    }

    /// A well-linked ordered `(p, q)`-segmentation: grid rows crossing the
    /// columns in order, plus a complete return block on the rows.
    pub fn well_linked_segmentation(p: usize, q: usize) -> (Digraph, StructuredPair) {
        let (grid, pair) = acyclic_grid(p, q);
        let id = |i: usize, j: usize| (i * q + j) as u32;
        let ret = |t: usize| (p * q + t) as u32;
        let mut arcs: Vec<(u32, u32)> = grid.arcs().collect();
        for i in 0..p {
            for t in 0..p {
                arcs.push((id(i, q - 1), ret(t)));
                arcs.push((ret(t), id(i, 0)));
                if t != i {
                    arcs.push((ret(i), ret(t)));
                }
            }
        }
        let host = Digraph::new(p * q + p, arcs);
        let q_star = pair.q.clone();
        let seg = StructuredPair {
            kind: StructureKind::OrderedSegmentation,
            p: pair.p,
            q: pair.q,
            meta: StructureMeta {
                q_star: Some(q_star),
                ordering: (0..q).collect(),
                well_linked: true,
                ..StructureMeta::default()
            },
        };
        (host, seg)
    }
}
