//! Vertex-disjoint path systems: Menger duality via unit-capacity
//! vertex-splitting flow, minimal and weakly minimal linkages, and
//! well-linkedness checking.

use std::collections::BTreeSet;

use crate::digraph::Digraph;
use crate::error::{Error, Result};

/// Default cap on terminal set sizes for the exhaustive well-linkedness check.
pub const WELL_LINKED_CAP: usize = 12;

/// An ordered collection of pairwise vertex-disjoint paths. A path may have
/// length zero (a single vertex), which arises when source and target sets
/// overlap. Usable as a partial function from its start vertices to its end
/// vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linkage {
    paths: Vec<Vec<u32>>,
}

impl Linkage {
    pub fn new(paths: Vec<Vec<u32>>) -> Result<Linkage> {
        let mut seen = BTreeSet::new();
        for p in &paths {
            if p.is_empty() {
                return Err(Error::InvalidInput("linkage contains an empty path".into()));
            }
            for &v in p {
                if !seen.insert(v) {
                    return Err(Error::InvalidInput(format!(
                        "linkage paths are not vertex-disjoint at {v}"
                    )));
                }
            }
        }
        Ok(Linkage { paths })
    }

    pub fn empty() -> Linkage {
        Linkage { paths: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[Vec<u32>] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &[u32] {
        &self.paths[i]
    }

    pub fn starts(&self) -> Vec<u32> {
        self.paths.iter().map(|p| p[0]).collect()
    }

    pub fn ends(&self) -> Vec<u32> {
        self.paths.iter().map(|p| *p.last().unwrap()).collect()
    }

    pub fn start_set(&self) -> BTreeSet<u32> {
        self.starts().into_iter().collect()
    }

    pub fn end_set(&self) -> BTreeSet<u32> {
        self.ends().into_iter().collect()
    }

    /// The end of the path starting at `a`.
    pub fn map(&self, a: u32) -> Option<u32> {
        self.paths
            .iter()
            .find(|p| p[0] == a)
            .map(|p| *p.last().unwrap())
    }

    pub fn path_starting_at(&self, a: u32) -> Option<&[u32]> {
        self.paths.iter().find(|p| p[0] == a).map(|p| p.as_slice())
    }

    pub fn vertex_set(&self) -> BTreeSet<u32> {
        self.paths.iter().flatten().copied().collect()
    }

    pub fn contains_vertex(&self, v: u32) -> bool {
        self.paths.iter().any(|p| p.contains(&v))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.paths
            .iter()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
    }

    /// The union of the linkage's paths as a digraph on `n` vertices.
    pub fn to_digraph(&self, n: usize) -> Digraph {
        Digraph::new(n, self.arcs())
    }

    pub fn is_valid_in(&self, d: &Digraph) -> bool {
        self.paths.iter().all(|p| {
            p.iter().all(|&v| (v as usize) < d.n()) && p.windows(2).all(|w| d.has_arc(w[0], w[1]))
        })
    }

    /// Sub-linkage of the paths starting in `starts`.
    pub fn restrict_to_starts(&self, starts: &BTreeSet<u32>) -> Linkage {
        Linkage {
            paths: self
                .paths
                .iter()
                .filter(|p| starts.contains(&p[0]))
                .cloned()
                .collect(),
        }
    }

    /// Concatenation: every end of `self` must be the start of a path of
    /// `next`, sharing exactly the junction vertex.
    pub fn concat(&self, next: &Linkage) -> Result<Linkage> {
        let mut paths = Vec::with_capacity(self.order());
        for p in &self.paths {
            let end = *p.last().unwrap();
            let q = next
                .path_starting_at(end)
                .ok_or_else(|| Error::InvalidInput(format!("no continuation at {end}")))?;
            let mut joined = p.clone();
            joined.extend_from_slice(&q[1..]);
            paths.push(joined);
        }
        Linkage::new(paths)
    }

    pub fn sorted_by_start(mut self) -> Linkage {
        self.paths.sort_by_key(|p| p[0]);
        self
    }
}

/// A vertex set whose removal destroys all paths of its defining query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separator {
    pub vertices: BTreeSet<u32>,
}

impl Separator {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

const INF: i64 = i64::MAX / 4;

struct FlowNet {
    // arc lists: to, cap, flow; paired arcs at 2i/2i+1
    to: Vec<usize>,
    cap: Vec<i64>,
    head: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(nodes: usize) -> FlowNet {
        FlowNet {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.head[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.head[v].push(id + 1);
        id
    }

    /// Edmonds–Karp; deterministic via insertion order.
    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        loop {
            let mut prev_arc: Vec<Option<usize>> = vec![None; self.head.len()];
            let mut seen = vec![false; self.head.len()];
            seen[s] = true;
            let mut q = std::collections::VecDeque::from([s]);
            'bfs: while let Some(u) = q.pop_front() {
                for &a in &self.head[u] {
                    if self.cap[a] > 0 && !seen[self.to[a]] {
                        seen[self.to[a]] = true;
                        prev_arc[self.to[a]] = Some(a);
                        if self.to[a] == t {
                            break 'bfs;
                        }
                        q.push_back(self.to[a]);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck = INF;
            let mut cur = t;
            while let Some(a) = prev_arc[cur] {
                bottleneck = bottleneck.min(self.cap[a]);
                cur = self.to[a ^ 1];
            }
            let mut cur = t;
            while let Some(a) = prev_arc[cur] {
                self.cap[a] -= bottleneck;
                self.cap[a ^ 1] += bottleneck;
                cur = self.to[a ^ 1];
            }
            total += bottleneck;
        }
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.head[u] {
                if self.cap[a] > 0 && !seen[self.to[a]] {
                    seen[self.to[a]] = true;
                    q.push_back(self.to[a]);
                }
            }
        }
        seen
    }
}

/// Maximum vertex-disjoint `A`-`B` linkage together with a minimum `A`-`B`
/// separator of the same size. Vertices in `A ∩ B` count as zero-length
/// paths. Linkage paths are reported in ascending start-id order.
pub fn menger(d: &Digraph, a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> (Linkage, Separator) {
    let n = d.n();
    let (s, t) = (2 * n, 2 * n + 1);
    let v_in = |v: u32| 2 * v as usize;
    let v_out = |v: u32| 2 * v as usize + 1;
    let mut net = FlowNet::new(2 * n + 2);
    let mut internal = vec![usize::MAX; n];
    for v in 0..n as u32 {
        internal[v as usize] = net.add(v_in(v), v_out(v), 1);
    }
    for (u, v) in d.arcs() {
        net.add(v_out(u), v_in(v), INF);
    }
    let mut src_arc = std::collections::BTreeMap::new();
    for &x in a {
        src_arc.insert(x, net.add(s, v_in(x), 1));
    }
    let mut sink_arc = std::collections::BTreeMap::new();
    for &y in b {
        sink_arc.insert(y, net.add(v_out(y), t, 1));
    }
    let value = net.max_flow(s, t);

    // Minimum separator from the residual cut, before path decomposition
    // mutates the network.
    let reach = net.residual_reachable(s);
    let mut cut = BTreeSet::new();
    for &x in a {
        if !reach[v_in(x)] {
            cut.insert(x);
        }
    }
    for v in 0..n as u32 {
        if reach[v_in(v)] && !reach[v_out(v)] {
            cut.insert(v);
        }
    }
    for &y in b {
        if reach[v_out(y)] {
            cut.insert(y);
        }
    }

    // Decompose flow into vertex-disjoint paths.
    let mut paths = Vec::new();
    for &x in a {
        let sa = src_arc[&x];
        if net.cap[sa] != 0 {
            continue; // source arc unused
        }
        let mut path = vec![x];
        let mut cur = x;
        loop {
            if let Some(&ta) = sink_arc.get(&cur) {
                if net.cap[ta] == 0 && consume_sink(&mut net, ta) {
                    break;
                }
            }
            // Follow the used outgoing arc from cur_out.
            let out_node = v_out(cur);
            let next = net.head[out_node].iter().copied().find(|&arcid| {
                arcid % 2 == 0 && arcid != internal[cur as usize] && {
                    // used iff residual on reverse arc > 0 and it is an arc net edge
                    net.cap[arcid ^ 1] > 0 && !is_terminal_arc(arcid, &src_arc, &sink_arc)
                }
            });
            let Some(arcid) = next else {
                break;
            };
            // consume one unit
            net.cap[arcid ^ 1] -= 1;
            net.cap[arcid] += 1;
            let to_node = net.to[arcid];
            let v = (to_node / 2) as u32;
            path.push(v);
            cur = v;
        }
        paths.push(path);
    }
    paths.sort_by_key(|p| p[0]);
    let linkage = Linkage::new(paths).expect("flow decomposition is vertex-disjoint");
    debug_assert_eq!(cut.len() as i64, value);
    debug_assert_eq!(linkage.order() as i64, value);
    (linkage, Separator { vertices: cut })
}

fn is_terminal_arc(
    arcid: usize,
    src: &std::collections::BTreeMap<u32, usize>,
    sink: &std::collections::BTreeMap<u32, usize>,
) -> bool {
    src.values().any(|&a| a == arcid) || sink.values().any(|&a| a == arcid)
}

fn consume_sink(net: &mut FlowNet, ta: usize) -> bool {
    if net.cap[ta ^ 1] > 0 {
        net.cap[ta ^ 1] -= 1;
        net.cap[ta] += 1;
        true
    } else {
        false
    }
}

/// Maximum order of a vertex-disjoint `A`-`B` linkage.
pub fn max_linkage_order(d: &Digraph, a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> usize {
    menger(d, a, b).0.order()
}

/// The ambient digraph `⋃L ∪ H` of a linkage and a subgraph.
pub fn ambient(l: &Linkage, h: &Digraph) -> Digraph {
    Digraph::new(h.n(), l.arcs().chain(h.arcs()))
}

/// True iff no single arc of `A(L) \ A(H)` can be deleted from `L ∪ H`
/// without reducing the achievable `Start(L)`-`End(L)` linkage order.
pub fn is_h_minimal(l: &Linkage, h: &Digraph) -> bool {
    let amb = ambient(l, h);
    let starts = l.start_set();
    let ends = l.end_set();
    for e in l.arcs() {
        if h.has_arc(e.0, e.1) {
            continue;
        }
        if max_linkage_order(&amb.without_arc(e), &starts, &ends) == l.order() {
            return false;
        }
    }
    true
}

/// `Start(L)`-`End(L)` linkage of the same order that is `H`-minimal,
/// obtained by iteratively deleting arcs outside `H` (ascending order) and
/// re-routing after each deletion. Order-1 linkages re-route through a
/// plain path search; larger orders go through Menger.
pub fn minimalize_linkage(h: &Digraph, l: &Linkage) -> Linkage {
    let starts = l.start_set();
    let ends = l.end_set();
    let order = l.order();
    let mut current = l.clone();
    'outer: loop {
        let amb = ambient(&current, h);
        let mut candidates: Vec<(u32, u32)> =
            current.arcs().filter(|&(u, v)| !h.has_arc(u, v)).collect();
        candidates.sort_unstable();
        candidates.dedup();
        for e in candidates {
            if order == 1 {
                let from: Vec<u32> = starts.iter().copied().collect();
                if let Some(p) = bfs_path_skipping(&amb, &from, &ends, e) {
                    current = Linkage::new(vec![p]).expect("a path is a linkage");
                    continue 'outer;
                }
            } else {
                let (lk, _) = menger(&amb.without_arc(e), &starts, &ends);
                if lk.order() == order {
                    current = lk;
                    continue 'outer;
                }
            }
        }
        break;
    }
    debug_assert_eq!(current.start_set(), starts);
    debug_assert_eq!(current.end_set(), ends);
    current
}

/// Shortest path ignoring one arc, without rebuilding the digraph.
fn bfs_path_skipping(
    d: &Digraph,
    from: &[u32],
    to: &BTreeSet<u32>,
    skip: (u32, u32),
) -> Option<Vec<u32>> {
    let mut prev: Vec<Option<u32>> = vec![None; d.n()];
    let mut seen = vec![false; d.n()];
    let mut queue = std::collections::VecDeque::new();
    for &s in from {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
            if to.contains(&s) {
                return Some(vec![s]);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in d.out_neighbours(u) {
            if seen[w as usize] || (u, w) == skip {
                continue;
            }
            seen[w as usize] = true;
            prev[w as usize] = Some(u);
            if to.contains(&w) {
                let mut path = vec![w];
                let mut cur = w;
                while let Some(p) = prev[cur as usize] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(w);
        }
    }
    None
}

/// Weak `k`-minimality: every decomposition `L1 · e · L2` of a path of `L`
/// at an arc `e ∉ A(H)` admits a `V(L1)`-`V(L2)` separator of size at most
/// `k - 1` in `(L ∪ H) - e`.
pub fn check_weak_minimality(l: &Linkage, h: &Digraph, k: usize) -> bool {
    let amb = ambient(l, h);
    for p in l.paths() {
        for i in 0..p.len().saturating_sub(1) {
            let e = (p[i], p[i + 1]);
            if h.has_arc(e.0, e.1) {
                continue;
            }
            let left: BTreeSet<u32> = p[..=i].iter().copied().collect();
            let right: BTreeSet<u32> = p[i + 1..].iter().copied().collect();
            let (_, sep) = menger(&amb.without_arc(e), &left, &right);
            if sep.size() > k.saturating_sub(1) {
                return false;
            }
        }
    }
    true
}

/// Outcome of a well-linkedness check.
#[derive(Debug, Clone)]
pub struct WellLinkedReport {
    pub well_linked: bool,
    /// Lexicographically least failing pair `(A', B')`, if any.
    pub counterexample: Option<(Vec<u32>, Vec<u32>)>,
}

/// `A` is well-linked to `B` iff every equal-size pair `A' ⊆ A`, `B' ⊆ B`
/// admits an `A'`-`B'` linkage of order `|A'|`. Exhaustive over subset pairs
/// (each checked through Menger), so both sets are capped.
pub fn check_well_linked(
    d: &Digraph,
    a: &BTreeSet<u32>,
    b: &BTreeSet<u32>,
    cap: usize,
) -> Result<WellLinkedReport> {
    if a.len() > cap || b.len() > cap {
        return Err(Error::CapExceeded(format!(
            "well-linkedness sets of sizes {} and {} exceed cap {cap}",
            a.len(),
            b.len()
        )));
    }
    let av: Vec<u32> = a.iter().copied().collect();
    let bv: Vec<u32> = b.iter().copied().collect();
    // Fast singleton screen: every a must reach every b.
    let empty = BTreeSet::new();
    for &x in &av {
        let reach = d.reachable(&[x], &empty);
        for &y in &bv {
            if x != y && !reach[y as usize] {
                return Ok(WellLinkedReport {
                    well_linked: false,
                    counterexample: Some((vec![x], vec![y])),
                });
            }
        }
    }
    for k in 2..=av.len().min(bv.len()) {
        for sub_a in crate::testutil::combinations(&av, k) {
            let sa: BTreeSet<u32> = sub_a.iter().copied().collect();
            for sub_b in crate::testutil::combinations(&bv, k) {
                let sb: BTreeSet<u32> = sub_b.iter().copied().collect();
                if max_linkage_order(d, &sa, &sb) < k {
                    return Ok(WellLinkedReport {
                        well_linked: false,
                        counterexample: Some((sub_a, sub_b)),
                    });
                }
            }
        }
    }
    Ok(WellLinkedReport {
        well_linked: true,
        counterexample: None,
    })
}

/// Exhaustive search for a vertex-disjoint linkage realising the exact
/// endpoint pairing `pairs[i] = (start, end)`. Paths may have length zero
/// (`start == end`). Feasibility-pruned backtracking; exact.
pub fn pinned_linkage(d: &Digraph, pairs: &[(u32, u32)]) -> Option<Linkage> {
    // Route the pairs in the given order; prune with a Menger bound.
    let mut used = vec![false; d.n()];
    let mut acc: Vec<Vec<u32>> = Vec::with_capacity(pairs.len());
    // All endpoints are distinct resources except identical start/end of one pair.
    let mut endpoint_guard = BTreeSet::new();
    for &(u, v) in pairs {
        endpoint_guard.insert(u);
        endpoint_guard.insert(v);
    }
    if route(d, pairs, 0, &mut used, &mut acc, &endpoint_guard) {
        Some(Linkage::new(acc).expect("backtracking keeps paths disjoint"))
    } else {
        None
    }
}

fn route(
    d: &Digraph,
    pairs: &[(u32, u32)],
    i: usize,
    used: &mut Vec<bool>,
    acc: &mut Vec<Vec<u32>>,
    endpoint_guard: &BTreeSet<u32>,
) -> bool {
    if i == pairs.len() {
        return true;
    }
    // Feasibility: the remaining endpoint sets must still admit a full
    // linkage in the graph minus everything used so far.
    let blocked: BTreeSet<u32> = (0..d.n() as u32).filter(|&v| used[v as usize]).collect();
    let rest = d.without_vertices(&blocked);
    let ra: BTreeSet<u32> = pairs[i..].iter().map(|p| p.0).collect();
    let rb: BTreeSet<u32> = pairs[i..].iter().map(|p| p.1).collect();
    if max_linkage_order(&rest, &ra, &rb) < rb.len().max(ra.len()) {
        return false;
    }
    let (s, t) = pairs[i];
    if used[s as usize] || used[t as usize] {
        return false;
    }
    // Vertices any current path must avoid: used ones and endpoints of the
    // other pairs.
    let mut forbidden = blocked;
    for (j, &(u, v)) in pairs.iter().enumerate() {
        if j != i {
            forbidden.insert(u);
            forbidden.insert(v);
        }
    }
    let _ = endpoint_guard;
    let mut path = vec![s];
    let mut on_path = vec![false; d.n()];
    on_path[s as usize] = true;
    extend_path(
        d,
        pairs,
        i,
        used,
        acc,
        &forbidden,
        &mut path,
        &mut on_path,
        t,
    )
}

#[allow(clippy::too_many_arguments)]
fn extend_path(
    d: &Digraph,
    pairs: &[(u32, u32)],
    i: usize,
    used: &mut Vec<bool>,
    acc: &mut Vec<Vec<u32>>,
    forbidden: &BTreeSet<u32>,
    path: &mut Vec<u32>,
    on_path: &mut Vec<bool>,
    target: u32,
) -> bool {
    let cur = *path.last().unwrap();
    if cur == target {
        for &v in path.iter() {
            used[v as usize] = true;
        }
        acc.push(path.clone());
        let endpoint_guard = BTreeSet::new();
        if route(d, pairs, i + 1, used, acc, &endpoint_guard) {
            return true;
        }
        acc.pop();
        for &v in path.iter() {
            used[v as usize] = false;
        }
        return false;
    }
    // Quick reachability prune.
    let mut avoid: BTreeSet<u32> = forbidden.clone();
    for &v in path.iter() {
        avoid.insert(v);
    }
    avoid.remove(&cur);
    avoid.remove(&target);
    let reach = d.reachable(&[cur], &avoid);
    if !reach[target as usize] {
        return false;
    }
    for &w in d.out_neighbours(cur) {
        if on_path[w as usize] || (forbidden.contains(&w) && w != target) {
            continue;
        }
        path.push(w);
        on_path[w as usize] = true;
        if extend_path(d, pairs, i, used, acc, forbidden, path, on_path, target) {
            return true;
        }
        path.pop();
        on_path[w as usize] = false;
    }
    false
}
