//! Exact cycle packing and feedback vertex set solvers, and the seeded
//! experiment harness around them.

use std::collections::BTreeSet;

use crate::digraph::{condensation, Digraph};
use crate::error::{Error, Result};

/// Exact-search cap; beyond it the solvers refuse rather than approximate.
pub const SOLVER_CAP: usize = 24;

/// Maximum number of pairwise vertex-disjoint cycles, with a witness
/// packing. Branch and bound: per strong component, either the first vertex
/// of the least shortest cycle stays unused, or one of the vertex-minimal
/// cycles through it is packed.
pub fn max_disjoint_cycles(d: &Digraph) -> Result<(usize, Vec<Vec<u32>>)> {
    if d.n() > SOLVER_CAP {
        return Err(Error::CapExceeded(format!(
            "{} vertices exceed the exact-search cap {SOLVER_CAP}",
            d.n()
        )));
    }
    let mut total = 0usize;
    let mut witness: Vec<Vec<u32>> = Vec::new();
    for comp in condensation(d).0 {
        if comp.len() < 2 {
            continue;
        }
        let alive: BTreeSet<u32> = comp.iter().copied().collect();
        let sub = d.restrict(&alive);
        let (nu, cycles) = pack(&sub, &alive);
        total += nu;
        witness.extend(cycles);
    }
    debug_assert!(pairwise_disjoint(&witness));
    debug_assert!(witness.iter().all(|c| is_cycle(d, c)));
    Ok((total, witness))
}

fn pairwise_disjoint(cycles: &[Vec<u32>]) -> bool {
    let mut seen = BTreeSet::new();
    cycles.iter().flatten().all(|v| seen.insert(*v))
}

fn is_cycle(d: &Digraph, c: &[u32]) -> bool {
    c.len() >= 2
        && c.windows(2).all(|w| d.has_arc(w[0], w[1]))
        && d.has_arc(*c.last().unwrap(), c[0])
        && c.iter().collect::<BTreeSet<_>>().len() == c.len()
}

/// Lexicographically least shortest cycle among `alive` vertices.
fn shortest_cycle(d: &Digraph, alive: &BTreeSet<u32>) -> Option<Vec<u32>> {
    let mut best: Option<Vec<u32>> = None;
    for &v in alive {
        // Shortest v -> v cycle via BFS from successors.
        let mut prev: Vec<Option<u32>> = vec![None; d.n()];
        let mut seen = vec![false; d.n()];
        let mut q = std::collections::VecDeque::new();
        for &w in d.out_neighbours(v) {
            if alive.contains(&w) && !seen[w as usize] {
                seen[w as usize] = true;
                prev[w as usize] = Some(v);
                q.push_back(w);
            }
        }
        let mut found: Option<Vec<u32>> = None;
        'bfs: while let Some(u) = q.pop_front() {
            for &w in d.out_neighbours(u) {
                if w == v {
                    let mut cyc = vec![u];
                    let mut cur = u;
                    while let Some(p) = prev[cur as usize] {
                        if p == v {
                            break;
                        }
                        cyc.push(p);
                        cur = p;
                    }
                    cyc.push(v);
                    cyc.reverse();
                    found = Some(cyc);
                    break 'bfs;
                }
                if alive.contains(&w) && !seen[w as usize] {
                    seen[w as usize] = true;
                    prev[w as usize] = Some(u);
                    q.push_back(w);
                }
            }
        }
        if let Some(c) = found {
            let better = match &best {
                None => true,
                Some(b) => c.len() < b.len() || (c.len() == b.len() && c < *b),
            };
            if better {
                best = Some(c);
            }
        }
    }
    best
}

/// Vertex-minimal cycles through `v`: simple cycles none of whose proper
/// vertex subsets carries a cycle examined via chord pruning.
fn minimal_cycles_through(d: &Digraph, alive: &BTreeSet<u32>, v: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut path = vec![v];
    let mut on = BTreeSet::from([v]);
    fn extend(
        d: &Digraph,
        alive: &BTreeSet<u32>,
        v: u32,
        path: &mut Vec<u32>,
        on: &mut BTreeSet<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        let cur = *path.last().unwrap();
        for &w in d.out_neighbours(cur) {
            if !alive.contains(&w) {
                continue;
            }
            if w == v {
                if path.len() >= 2 {
                    out.push(path.clone());
                }
                continue;
            }
            if on.contains(&w) {
                continue;
            }
            // Chord pruning: adding w must not create any arc between w and
            // a non-adjacent path vertex (which would shortcut to a smaller
            // cycle on a subset).
            let mut chord = false;
            for (idx, &u) in path.iter().enumerate() {
                let last = idx + 1 == path.len();
                // Arc from w back into the path other than (w, v) closes a
                // smaller cycle; arc from a non-tail path vertex to w
                // shortcuts the tail.
                if d.has_arc(w, u) && u != v {
                    chord = true;
                    break;
                }
                if !last && d.has_arc(u, w) {
                    chord = true;
                    break;
                }
            }
            if chord {
                continue;
            }
            path.push(w);
            on.insert(w);
            extend(d, alive, v, path, on, out);
            path.pop();
            on.remove(&w);
        }
    }
    extend(d, alive, v, &mut path, &mut on, &mut out);
    out
}

/// Greedy packing: repeatedly removes the least shortest cycle. Seeds the
/// incumbent for the exact branch and bound.
fn greedy_pack(d: &Digraph, alive: &BTreeSet<u32>) -> Vec<Vec<u32>> {
    let mut alive = alive.clone();
    let mut out = Vec::new();
    while let Some(c) = shortest_cycle(d, &alive) {
        for v in &c {
            alive.remove(v);
        }
        out.push(c);
    }
    out
}

fn pack(d: &Digraph, alive: &BTreeSet<u32>) -> (usize, Vec<Vec<u32>>) {
    let seed = greedy_pack(d, alive);
    let mut best = (seed.len(), seed);
    let mut packed: Vec<Vec<u32>> = Vec::new();
    pack_branch(d, alive, &mut packed, &mut best);
    best
}

fn pack_branch(
    d: &Digraph,
    alive: &BTreeSet<u32>,
    packed: &mut Vec<Vec<u32>>,
    best: &mut (usize, Vec<Vec<u32>>),
) {
    // Every further cycle consumes at least two alive vertices.
    if packed.len() + alive.len() / 2 <= best.0 {
        return;
    }
    let Some(short) = shortest_cycle(d, alive) else {
        if packed.len() > best.0 {
            *best = (packed.len(), packed.clone());
        }
        return;
    };
    let pivot = short[0];
    // Branch B first: pack a vertex-minimal cycle through the pivot.
    for cyc in minimal_cycles_through(d, alive, pivot) {
        let mut rest = alive.clone();
        for v in &cyc {
            rest.remove(v);
        }
        packed.push(cyc);
        pack_branch(d, &rest, packed, best);
        packed.pop();
    }
    // Branch A: pivot unused.
    let mut rest = alive.clone();
    rest.remove(&pivot);
    pack_branch(d, &rest, packed, best);
}

/// Minimum feedback vertex set with a witness. Branches on the vertices of
/// a shortest cycle; per strong component.
pub fn min_fvs(d: &Digraph) -> Result<(usize, Vec<u32>)> {
    if d.n() > SOLVER_CAP {
        return Err(Error::CapExceeded(format!(
            "{} vertices exceed the exact-search cap {SOLVER_CAP}",
            d.n()
        )));
    }
    let mut total = 0usize;
    let mut witness: Vec<u32> = Vec::new();
    for comp in condensation(d).0 {
        if comp.len() < 2 {
            continue;
        }
        let alive: BTreeSet<u32> = comp.iter().copied().collect();
        let sub = d.restrict(&alive);
        // Greedy incumbent: repeatedly delete the first vertex of the least
        // shortest cycle.
        let mut greedy_alive = alive.clone();
        let mut greedy: Vec<u32> = Vec::new();
        while let Some(c) = shortest_cycle(&sub, &greedy_alive) {
            greedy_alive.remove(&c[0]);
            greedy.push(c[0]);
        }
        let mut best = greedy.len();
        let mut best_set: Vec<u32> = greedy;
        let mut chosen = Vec::new();
        fvs_search(&sub, &alive, &mut chosen, &mut best, &mut best_set);
        total += best;
        witness.extend(best_set);
    }
    let cut: BTreeSet<u32> = witness.iter().copied().collect();
    debug_assert!(d.without_vertices(&cut).is_acyclic());
    witness.sort_unstable();
    Ok((total, witness))
}

fn fvs_search(
    d: &Digraph,
    alive: &BTreeSet<u32>,
    chosen: &mut Vec<u32>,
    best: &mut usize,
    best_set: &mut Vec<u32>,
) {
    if chosen.len() >= *best {
        return;
    }
    let Some(cycle) = shortest_cycle(d, alive) else {
        *best = chosen.len();
        *best_set = chosen.clone();
        return;
    };
    if chosen.len() + fvs_lower_bound(d, alive) >= *best {
        return;
    }
    for &v in &cycle {
        let mut rest = alive.clone();
        rest.remove(&v);
        chosen.push(v);
        fvs_search(d, &rest, chosen, best, best_set);
        chosen.pop();
    }
}

/// Deletions still needed: disjoint cliques in the mutual-2-cycle graph
/// force all but one vertex each, and vertex-disjoint leftover cycles force
/// one more apiece.
fn fvs_lower_bound(d: &Digraph, alive: &BTreeSet<u32>) -> usize {
    let mut remaining = alive.clone();
    let mut lb = 0usize;
    loop {
        // Greedy mutual clique seeded at the vertex of largest mutual degree.
        let mutual = |u: u32, v: u32| d.has_arc(u, v) && d.has_arc(v, u);
        let seed = remaining
            .iter()
            .copied()
            .max_by_key(|&u| {
                (
                    remaining
                        .iter()
                        .filter(|&&v| v != u && mutual(u, v))
                        .count(),
                    u32::MAX - u,
                )
            })
            .filter(|&u| remaining.iter().any(|&v| v != u && mutual(u, v)));
        let Some(seed) = seed else { break };
        let mut clique = vec![seed];
        for &v in remaining.iter() {
            if v != seed && clique.iter().all(|&c| mutual(c, v)) {
                clique.push(v);
            }
        }
        if clique.len() < 2 {
            break;
        }
        lb += clique.len() - 1;
        for v in clique {
            remaining.remove(&v);
        }
    }
    // Leftover vertex-disjoint cycles each force one deletion.
    let sub = d.restrict(&remaining);
    lb + greedy_pack(&sub, &remaining).len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentGen {
    UniformRandom,
    Tournament,
    Canonical,
    CylindricalGrid,
}

impl ExperimentGen {
    pub fn parse(s: &str) -> Result<ExperimentGen> {
        Ok(match s {
            "uniform" => ExperimentGen::UniformRandom,
            "tournament" => ExperimentGen::Tournament,
            "canonical" => ExperimentGen::Canonical,
            "cylindrical-grid" => ExperimentGen::CylindricalGrid,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown generator {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub gen: ExperimentGen,
    pub sizes: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    /// When false (the default) the runtime column reports 0 so reruns with
    /// a fixed seed stay byte-identical.
    pub timing: bool,
}

/// Runs the duality experiment: for every seeded instance, the exact packing
/// and covering numbers. Per-instance seeds derive from the master seed and
/// the instance index, so the CSV is reproducible independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<String> {
    let mut csv = String::from("# duality experiment v1: seed,n,m,nu,tau,runtime_ms\n");
    csv.push_str("seed,n,m,nu,tau,runtime_ms\n");
    let mut index = 0u64;
    for &n in &cfg.sizes {
        if n > SOLVER_CAP {
            return Err(Error::CapExceeded(format!(
                "size {n} exceeds the solver cap"
            )));
        }
        for _ in 0..cfg.count {
            let seed = cfg
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(index);
            index += 1;
            let d = match cfg.gen {
                ExperimentGen::UniformRandom => crate::testutil::random_digraph(seed, n, 250),
                ExperimentGen::Tournament => crate::testutil::random_tournament(seed, n),
                ExperimentGen::Canonical => {
                    crate::digraph::build_family(crate::digraph::Family::Cycle, n.max(2))?
                }
                ExperimentGen::CylindricalGrid => crate::gridweb::cylindrical_grid(n).0,
            };
            let start = std::time::Instant::now();
            let (nu, _) = max_disjoint_cycles(&d)?;
            let (tau, _) = min_fvs(&d)?;
            let ms = if cfg.timing {
                start.elapsed().as_millis()
            } else {
                0
            };
            if nu > tau {
                return Err(Error::Internal(format!(
                    "packing exceeded the covering number on seed {seed}"
                )));
            }
            csv.push_str(&format!("{seed},{n},{},{nu},{tau},{ms}\n", d.arc_count()));
        }
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{build_family, Family};
    use crate::testutil;

    #[test]
    fn nu_examples() {
        let dag = build_family(Family::Path, 5).unwrap();
        assert_eq!(max_disjoint_cycles(&dag).unwrap().0, 0);

        // k disjoint 2-cycles.
        for k in 1..=4usize {
            let arcs: Vec<(u32, u32)> = (0..k as u32)
                .flat_map(|i| [(2 * i, 2 * i + 1), (2 * i + 1, 2 * i)])
                .collect();
            let d = Digraph::new(2 * k, arcs);
            let (nu, w) = max_disjoint_cycles(&d).unwrap();
            assert_eq!(nu, k);
            assert_eq!(w.len(), k);
        }

        let k3 = build_family(Family::BidirectedClique, 3).unwrap();
        assert_eq!(max_disjoint_cycles(&k3).unwrap().0, 1);
    }

    #[test]
    fn tau_examples() {
        for k in 2..=6usize {
            let c = build_family(Family::Cycle, k).unwrap();
            assert_eq!(min_fvs(&c).unwrap().0, 1);
        }
        let dag = build_family(Family::TransitiveTournament, 5).unwrap();
        assert_eq!(min_fvs(&dag).unwrap().0, 0);
        let k4 = build_family(Family::BidirectedClique, 4).unwrap();
        assert_eq!(min_fvs(&k4).unwrap().0, 3);
    }

    /// Exhaustive oracle: maximum packing via subset enumeration of
    /// vertex-disjoint cycle supports.
    fn brute_nu(d: &Digraph) -> usize {
        fn go(d: &Digraph, alive: &BTreeSet<u32>) -> usize {
            let mut best = 0;
            // Enumerate all simple cycles on alive vertices.
            let cycles = all_cycles(d, alive);
            for c in cycles {
                let mut rest = alive.clone();
                for v in &c {
                    rest.remove(v);
                }
                best = best.max(1 + go(d, &rest));
            }
            best
        }
        fn all_cycles(d: &Digraph, alive: &BTreeSet<u32>) -> Vec<Vec<u32>> {
            let mut out = Vec::new();
            for &v in alive {
                let mut path = vec![v];
                let mut on = BTreeSet::from([v]);
                cyc(d, alive, v, &mut path, &mut on, &mut out);
            }
            out
        }
        #[allow(clippy::too_many_arguments)]
        fn cyc(
            d: &Digraph,
            alive: &BTreeSet<u32>,
            v: u32,
            path: &mut Vec<u32>,
            on: &mut BTreeSet<u32>,
            out: &mut Vec<Vec<u32>>,
        ) {
            let cur = *path.last().unwrap();
            for &w in d.out_neighbours(cur) {
                if !alive.contains(&w) || w < v {
                    continue;
                }
                if w == v && path.len() >= 2 {
                    out.push(path.clone());
                    continue;
                }
                if on.contains(&w) {
                    continue;
                }
                path.push(w);
                on.insert(w);
                cyc(d, alive, v, path, on, out);
                path.pop();
                on.remove(&w);
            }
        }
        go(d, &d.vertices().collect())
    }

    /// Exhaustive oracle for the covering number.
    fn brute_tau(d: &Digraph) -> usize {
        let verts: Vec<u32> = d.vertices().collect();
        for k in 0..=verts.len() {
            for sub in testutil::combinations(&verts, k) {
                let x: BTreeSet<u32> = sub.into_iter().collect();
                if d.without_vertices(&x).is_acyclic() {
                    return k;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn solvers_match_bruteforce() {
        for seed in 0..60u64 {
            let d = testutil::random_digraph(seed, 6, 300);
            let (nu, w) = max_disjoint_cycles(&d).unwrap();
            assert_eq!(nu, brute_nu(&d), "nu seed {seed}");
            assert!(w.iter().all(|c| is_cycle(&d, c)));
            let (tau, fvs) = min_fvs(&d).unwrap();
            assert_eq!(tau, brute_tau(&d), "tau seed {seed}");
            let cut: BTreeSet<u32> = fvs.into_iter().collect();
            assert!(d.without_vertices(&cut).is_acyclic());
            assert!(nu <= tau);
        }
    }

    #[test]
    fn grid_packs_its_rings() {
        for k in 1..=3usize {
            let (d, _) = crate::gridweb::cylindrical_grid(k);
            if d.n() > SOLVER_CAP {
                continue;
            }
            let (nu, _) = max_disjoint_cycles(&d).unwrap();
            let (tau, _) = min_fvs(&d).unwrap();
            assert!(nu >= k, "order {k}: nu = {nu}");
            assert!(tau >= k, "order {k}: tau = {tau}");
        }
    }

    #[test]
    fn experiment_deterministic() {
        let cfg = ExperimentConfig {
            gen: ExperimentGen::UniformRandom,
            sizes: vec![4, 5],
            count: 3,
            seed: 42,
            timing: false,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# duality experiment v1"));
        // nu <= tau on every row.
        for line in a.lines().skip(2) {
            let cols: Vec<&str> = line.split(',').collect();
            let nu: usize = cols[3].parse().unwrap();
            let tau: usize = cols[4].parse().unwrap();
            assert!(nu <= tau);
        }
    }

    #[test]
    fn nu_zero_iff_tau_zero() {
        for seed in 0..200u64 {
            let d = testutil::random_digraph(seed, 5, 200);
            let (nu, _) = max_disjoint_cycles(&d).unwrap();
            let (tau, _) = min_fvs(&d).unwrap();
            assert_eq!(nu == 0, tau == 0, "seed {seed}");
        }
    }
}
