//! Digraph representation, canonical generators and elementary subroutines:
//! condensation, antichains in DAGs, monotone subsequences, tournament
//! Hamiltonian paths and covering walks in unilateral digraphs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// An immutable simple digraph over dense vertex ids `0..n`.
///
/// Self-loops and parallel arcs are removed on construction; adjacency lists
/// are kept sorted so every iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    arcs: BTreeSet<(u32, u32)>,
}

impl Digraph {
    pub fn new(n: usize, arc_list: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut arcs = BTreeSet::new();
        for (u, v) in arc_list {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "arc endpoint out of range"
            );
            if u != v {
                arcs.insert((u, v));
            }
        }
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(u, v) in &arcs {
            out[u as usize].push(v);
            inc[v as usize].push(u);
        }
        for l in inc.iter_mut() {
            l.sort_unstable();
        }
        Digraph { n, out, inc, arcs }
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn has_arc(&self, u: u32, v: u32) -> bool {
        self.arcs.contains(&(u, v))
    }

    pub fn out_neighbours(&self, v: u32) -> &[u32] {
        &self.out[v as usize]
    }

    pub fn in_neighbours(&self, v: u32) -> &[u32] {
        &self.inc[v as usize]
    }

    pub fn out_degree(&self, v: u32) -> usize {
        self.out[v as usize].len()
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.inc[v as usize].len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> {
        0..self.n as u32
    }

    /// Union of the arc sets of `self` and `other` on the larger vertex range.
    pub fn union(&self, other: &Digraph) -> Digraph {
        let n = self.n.max(other.n);
        Digraph::new(n, self.arcs().chain(other.arcs()))
    }

    pub fn reverse(&self) -> Digraph {
        Digraph::new(self.n, self.arcs().map(|(u, v)| (v, u)))
    }

    /// Subgraph induced by `keep`, preserving vertex ids (dropped vertices
    /// become isolated).
    pub fn restrict(&self, keep: &BTreeSet<u32>) -> Digraph {
        Digraph::new(
            self.n,
            self.arcs()
                .filter(|(u, v)| keep.contains(u) && keep.contains(v)),
        )
    }

    pub fn without_vertices(&self, drop: &BTreeSet<u32>) -> Digraph {
        Digraph::new(
            self.n,
            self.arcs()
                .filter(|(u, v)| !drop.contains(u) && !drop.contains(v)),
        )
    }

    pub fn without_arc(&self, a: (u32, u32)) -> Digraph {
        Digraph::new(self.n, self.arcs().filter(|&e| e != a))
    }

    /// Vertices reachable from any vertex of `from`, optionally avoiding a
    /// forbidden set (forbidden start vertices are not expanded either).
    pub fn reachable(&self, from: &[u32], forbidden: &BTreeSet<u32>) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &s in from {
            if !forbidden.contains(&s) && !seen[s as usize] {
                seen[s as usize] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in self.out_neighbours(u) {
                if !seen[w as usize] && !forbidden.contains(&w) {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Shortest path from `from` to any vertex of `to` avoiding `forbidden`
    /// on interior and endpoints alike.
    pub fn bfs_path(
        &self,
        from: &[u32],
        to: &BTreeSet<u32>,
        forbidden: &BTreeSet<u32>,
    ) -> Option<Vec<u32>> {
        let mut prev: Vec<Option<u32>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &s in from {
            if !forbidden.contains(&s) && !seen[s as usize] {
                seen[s as usize] = true;
                queue.push_back(s);
                if to.contains(&s) {
                    return Some(vec![s]);
                }
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in self.out_neighbours(u) {
                if seen[w as usize] || forbidden.contains(&w) {
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

    /// Strongly connected components in a deterministic topological order of
    /// the quotient (sources first); ties broken by least contained id.
    pub fn sccs(&self) -> Vec<Vec<u32>> {
        // Tarjan, iterative.
        let n = self.n;
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut next_index = 0usize;
        let mut comps: Vec<Vec<u32>> = Vec::new();

        #[derive(Clone)]
        struct Frame {
            v: u32,
            child: usize,
        }

        for start in 0..n as u32 {
            if index[start as usize] != usize::MAX {
                continue;
            }
            let mut call = vec![Frame { v: start, child: 0 }];
            index[start as usize] = next_index;
            low[start as usize] = next_index;
            next_index += 1;
            stack.push(start);
            on_stack[start as usize] = true;
            while let Some(frame) = call.last_mut() {
                let v = frame.v;
                if frame.child < self.out[v as usize].len() {
                    let w = self.out[v as usize][frame.child];
                    frame.child += 1;
                    if index[w as usize] == usize::MAX {
                        index[w as usize] = next_index;
                        low[w as usize] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w as usize] = true;
                        call.push(Frame { v: w, child: 0 });
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                } else {
                    if low[v as usize] == index[v as usize] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w as usize] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                    let done = frame.v;
                    call.pop();
                    if let Some(parent) = call.last() {
                        low[parent.v as usize] = low[parent.v as usize].min(low[done as usize]);
                    }
                }
            }
        }
        // Tarjan emits components in reverse topological order.
        comps.reverse();
        // Stable-sort equally ordered components? Topological order may not be
        // unique; normalise by topological level then least id.
        let comp_of = {
            let mut map = vec![0usize; n];
            for (i, c) in comps.iter().enumerate() {
                for &v in c {
                    map[v as usize] = i;
                }
            }
            map
        };
        let k = comps.len();
        let mut quotient_arcs = BTreeSet::new();
        for (u, v) in self.arcs() {
            let (cu, cv) = (comp_of[u as usize], comp_of[v as usize]);
            if cu != cv {
                quotient_arcs.insert((cu, cv));
            }
        }
        let mut indeg = vec![0usize; k];
        for &(_, b) in &quotient_arcs {
            indeg[b] += 1;
        }
        let mut order: Vec<usize> = Vec::with_capacity(k);
        let mut ready: BTreeSet<(u32, usize)> = (0..k)
            .filter(|&c| indeg[c] == 0)
            .map(|c| (comps[c][0], c))
            .collect();
        let mut out_q = vec![Vec::new(); k];
        for &(a, b) in &quotient_arcs {
            out_q[a].push(b);
        }
        while let Some(&(key, c)) = ready.iter().next() {
            ready.remove(&(key, c));
            order.push(c);
            for &b in &out_q[c] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.insert((comps[b][0], b));
                }
            }
        }
        order.into_iter().map(|c| comps[c].clone()).collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.n <= 1 || self.sccs().len() == 1
    }

    pub fn is_acyclic(&self) -> bool {
        self.sccs().iter().all(|c| c.len() == 1) && self.vertices().all(|v| !self.has_arc(v, v))
    }

    pub fn is_tournament(&self) -> bool {
        for u in 0..self.n as u32 {
            for v in (u + 1)..self.n as u32 {
                let fwd = self.has_arc(u, v);
                let bwd = self.has_arc(v, u);
                if fwd == bwd {
                    return false;
                }
            }
        }
        true
    }
}

/// An explicit subgraph fragment of a host digraph: a vertex set plus an arc
/// set over host ids. Used for clusters and for the blocks a linkage crosses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubDigraph {
    pub vertices: BTreeSet<u32>,
    pub arcs: BTreeSet<(u32, u32)>,
}

impl SubDigraph {
    pub fn new(
        vertices: impl IntoIterator<Item = u32>,
        arcs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Self {
        let mut vertices: BTreeSet<u32> = vertices.into_iter().collect();
        let arcs: BTreeSet<(u32, u32)> = arcs.into_iter().filter(|(u, v)| u != v).collect();
        for &(u, v) in &arcs {
            vertices.insert(u);
            vertices.insert(v);
        }
        SubDigraph { vertices, arcs }
    }

    /// Induced fragment of `d` on `keep`.
    pub fn induced(d: &Digraph, keep: &BTreeSet<u32>) -> Self {
        SubDigraph {
            vertices: keep.clone(),
            arcs: d
                .arcs()
                .filter(|(u, v)| keep.contains(u) && keep.contains(v))
                .collect(),
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.vertices.contains(&v)
    }

    pub fn is_disjoint(&self, other: &SubDigraph) -> bool {
        self.vertices.is_disjoint(&other.vertices)
    }

    /// The fragment as a digraph on `n` host vertices (absent vertices stay
    /// isolated).
    pub fn to_digraph(&self, n: usize) -> Digraph {
        Digraph::new(n, self.arcs.iter().copied())
    }

    pub fn union(&self, other: &SubDigraph) -> SubDigraph {
        SubDigraph {
            vertices: self.vertices.union(&other.vertices).copied().collect(),
            arcs: self.arcs.union(&other.arcs).copied().collect(),
        }
    }
}

/// A walk: a nonempty vertex sequence whose consecutive pairs are arcs of the
/// host. A path additionally repeats no vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk(pub Vec<u32>);

impl Walk {
    pub fn start(&self) -> u32 {
        *self.0.first().expect("walk is nonempty")
    }

    pub fn end(&self) -> u32 {
        *self.0.last().expect("walk is nonempty")
    }

    pub fn len_arcs(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_valid(&self, host: &Digraph) -> bool {
        !self.0.is_empty() && self.0.windows(2).all(|w| host.has_arc(w[0], w[1]))
    }

    pub fn is_path(&self, host: &Digraph) -> bool {
        self.is_valid(host) && {
            let set: BTreeSet<u32> = self.0.iter().copied().collect();
            set.len() == self.0.len()
        }
    }
}

/// A sequence of distinct vertex ids in which position matters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedVertexSet(pub Vec<u32>);

impl OrderedVertexSet {
    pub fn new(elements: Vec<u32>) -> Result<Self> {
        let set: BTreeSet<u32> = elements.iter().copied().collect();
        if set.len() != elements.len() {
            return Err(Error::InvalidParameter("ordered set has duplicates".into()));
        }
        Ok(OrderedVertexSet(elements))
    }

    pub fn position(&self, v: u32) -> Option<usize> {
        self.0.iter().position(|&x| x == v)
    }
}

/// Canonical digraph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    BidirectedPath,
    Cycle,
    BidirectedClique,
    BidirectedStar,
    TransitiveTournament,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "path" => Family::Path,
            "bidirected-path" => Family::BidirectedPath,
            "cycle" => Family::Cycle,
            "bidirected-clique" => Family::BidirectedClique,
            "bidirected-star" => Family::BidirectedStar,
            "transitive-tournament" => Family::TransitiveTournament,
            other => return Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        })
    }
}

/// Canonical member of `family` on ids `0..k` (the bidirected star gets a
/// centre `0` plus `k` leaves).
pub fn build_family(family: Family, k: usize) -> Result<Digraph> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "family size must be positive".into(),
        ));
    }
    let ids = 0..k as u32;
    Ok(match family {
        Family::Path => Digraph::new(k, ids.clone().zip(1..k as u32)),
        Family::BidirectedPath => {
            Digraph::new(k, (1..k as u32).flat_map(|v| [(v - 1, v), (v, v - 1)]))
        }
        Family::Cycle => Digraph::new(k, (0..k as u32).map(|u| (u, (u + 1) % k as u32))),
        Family::BidirectedClique => Digraph::new(
            k,
            (0..k as u32)
                .flat_map(|u| (0..k as u32).map(move |v| (u, v)))
                .filter(|(u, v)| u != v),
        ),
        Family::BidirectedStar => {
            Digraph::new(k + 1, (1..=k as u32).flat_map(|v| [(0, v), (v, 0)]))
        }
        Family::TransitiveTournament => Digraph::new(
            k,
            (0..k as u32).flat_map(|u| ((u + 1)..k as u32).map(move |v| (u, v))),
        ),
    })
}

/// Butterfly contraction of the arc `(u, v)`: requires `outdeg(u) = 1` or
/// `indeg(v) = 1`; in-neighbours of `u` and out-neighbours of `v` are rewired
/// onto the merged vertex, loops and duplicates are dropped and the remaining
/// ids are recompacted (the merged vertex keeps `min(u, v)`).
pub fn butterfly_contract(d: &Digraph, arc: (u32, u32)) -> Result<Digraph> {
    let (u, v) = arc;
    if !d.has_arc(u, v) {
        return Err(Error::ContractionPrecondition(format!(
            "({u},{v}) is not an arc"
        )));
    }
    if d.out_degree(u) != 1 && d.in_degree(v) != 1 {
        return Err(Error::ContractionPrecondition(format!(
            "({u},{v}): outdeg({u})={} and indeg({v})={}",
            d.out_degree(u),
            d.in_degree(v)
        )));
    }
    let merged = u.min(v);
    // Relabel in ascending id order with the merged vertex sitting at
    // min(u, v)'s slot.
    let mut relabel = vec![u32::MAX; d.n()];
    let mut next = 0u32;
    let mut merged_id = 0u32;
    for w in 0..d.n() as u32 {
        if w == u.max(v) {
            continue;
        }
        if w == merged {
            merged_id = next;
        }
        relabel[w as usize] = next;
        next += 1;
    }
    let mut arcs = Vec::new();
    for (a, b) in d.arcs() {
        if (a == u || a == v) || (b == u || b == v) {
            continue;
        }
        arcs.push((relabel[a as usize], relabel[b as usize]));
    }
    for &w in d.in_neighbours(u) {
        if w != u && w != v {
            arcs.push((relabel[w as usize], merged_id));
        }
    }
    for &w in d.out_neighbours(v) {
        if w != u && w != v {
            arcs.push((merged_id, relabel[w as usize]));
        }
    }
    Ok(Digraph::new(d.n() - 1, arcs))
}

/// Condensation: the strong components in a deterministic topological order
/// together with the acyclic quotient digraph.
pub fn condensation(d: &Digraph) -> (Vec<Vec<u32>>, Digraph) {
    let comps = d.sccs();
    let mut comp_of = vec![0usize; d.n()];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v as usize] = i;
        }
    }
    let quotient = Digraph::new(
        comps.len(),
        d.arcs().filter_map(|(u, v)| {
            let (a, b) = (comp_of[u as usize] as u32, comp_of[v as usize] as u32);
            (a != b).then_some((a, b))
        }),
    );
    (comps, quotient)
}

/// True iff every ordered vertex pair is connected in at least one direction.
pub fn is_unilateral(d: &Digraph) -> bool {
    let empty = BTreeSet::new();
    let reach: Vec<Vec<bool>> = (0..d.n() as u32)
        .map(|v| d.reachable(&[v], &empty))
        .collect();
    for (u, row) in reach.iter().enumerate() {
        for v in (u + 1)..d.n() {
            if !row[v] && !reach[v][u] {
                return false;
            }
        }
    }
    true
}

/// Result of [`dag_antichain`]: the chosen level and whether the stated size
/// guarantee applied to the input.
#[derive(Debug, Clone)]
pub struct Antichain {
    pub vertices: Vec<u32>,
    pub guaranteed: bool,
}

/// Largest level of the longest-source-distance levelling of an acyclic
/// digraph: its vertices are pairwise unreachable. When the input violates
/// the size guarantee (`|V| > ell * p` with no path on `p` vertices) the best
/// level found is still returned, flagged.
pub fn dag_antichain(d: &Digraph, ell: usize, p: usize) -> Result<Antichain> {
    if !d.is_acyclic() {
        return Err(Error::InvalidInput("digraph is not acyclic".into()));
    }
    // Longest path (in arcs) from a source to each vertex.
    let order: Vec<u32> = condensation(d).0.into_iter().map(|c| c[0]).collect();
    let mut dist = vec![0usize; d.n()];
    for &v in &order {
        for &w in d.out_neighbours(v) {
            dist[w as usize] = dist[w as usize].max(dist[v as usize] + 1);
        }
    }
    let max_level = dist.iter().copied().max().unwrap_or(0);
    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); max_level + 1];
    for v in 0..d.n() as u32 {
        levels[dist[v as usize]].push(v);
    }
    let best = levels
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
        .map(|(_, l)| l.clone())
        .unwrap_or_default();
    let longest_path_vertices = max_level + 1;
    let guaranteed = longest_path_vertices < p && d.n() > ell * p;
    if best.len() < ell && !guaranteed {
        return Ok(Antichain {
            vertices: best,
            guaranteed: false,
        });
    }
    Ok(Antichain {
        vertices: best,
        guaranteed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneKind {
    Increasing,
    Decreasing,
}

/// Monotone subsequence of length `r` (increasing, preferred) or `s`
/// (decreasing), with the earliest-index witness.
pub fn monotone_subsequence(seq: &[i64], r: usize, s: usize) -> Result<(MonotoneKind, Vec<i64>)> {
    if let Some(w) = earliest_monotone(seq, r, true) {
        return Ok((MonotoneKind::Increasing, w));
    }
    if let Some(w) = earliest_monotone(seq, s, false) {
        return Ok((MonotoneKind::Decreasing, w));
    }
    Err(Error::GuaranteeUnavailable(format!(
        "sequence of length {} has no increasing run of {r} nor decreasing run of {s} \
         (guarantee needs length >= {})",
        seq.len(),
        (r.saturating_sub(1)) * (s.saturating_sub(1)) + 1
    )))
}

fn earliest_monotone(seq: &[i64], target: usize, increasing: bool) -> Option<Vec<i64>> {
    if target == 0 {
        return Some(Vec::new());
    }
    let n = seq.len();
    // tail[i] = longest monotone subsequence starting at i.
    let mut tail = vec![1usize; n];
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let ok = if increasing {
                seq[j] > seq[i]
            } else {
                seq[j] < seq[i]
            };
            if ok {
                tail[i] = tail[i].max(tail[j] + 1);
            }
        }
    }
    if tail.iter().copied().max().unwrap_or(0) < target {
        return None;
    }
    let mut picked = Vec::with_capacity(target);
    let mut need = target;
    let mut from = 0usize;
    let mut last: Option<i64> = None;
    while need > 0 {
        let i = (from..n).find(|&i| {
            tail[i] >= need && last.is_none_or(|l| if increasing { seq[i] > l } else { seq[i] < l })
        })?;
        picked.push(seq[i]);
        last = Some(seq[i]);
        from = i + 1;
        need -= 1;
    }
    Some(picked)
}

/// Hamiltonian path of a tournament built by insertion, plus the exact count
/// of Hamiltonian paths when the tournament has at most 10 vertices.
pub fn tournament_ham_path(t: &Digraph) -> Result<(Walk, Option<u64>)> {
    if !t.is_tournament() {
        return Err(Error::InvalidInput("digraph is not a tournament".into()));
    }
    let mut path: Vec<u32> = Vec::with_capacity(t.n());
    for v in 0..t.n() as u32 {
        if path.is_empty() {
            path.push(v);
            continue;
        }
        if t.has_arc(v, path[0]) {
            path.insert(0, v);
            continue;
        }
        let mut placed = false;
        for i in 0..path.len() - 1 {
            if t.has_arc(path[i], v) && t.has_arc(v, path[i + 1]) {
                path.insert(i + 1, v);
                placed = true;
                break;
            }
        }
        if !placed {
            path.push(v);
        }
    }
    let count = (t.n() <= 10).then(|| count_ham_paths(t));
    Ok((Walk(path), count))
}

fn count_ham_paths(t: &Digraph) -> u64 {
    let n = t.n();
    if n == 0 {
        return 0;
    }
    let full = (1usize << n) - 1;
    // dp[mask][last]
    let mut dp = vec![vec![0u64; n]; 1 << n];
    for v in 0..n {
        dp[1 << v][v] = 1;
    }
    for mask in 1..=full {
        for last in 0..n {
            let ways = dp[mask][last];
            if ways == 0 || mask & (1 << last) == 0 {
                continue;
            }
            for &w in t.out_neighbours(last as u32) {
                let w = w as usize;
                if mask & (1 << w) == 0 {
                    dp[mask | (1 << w)][w] += ways;
                }
            }
        }
    }
    (0..n).map(|last| dp[full][last]).sum()
}

/// Walk containing all of `s`, of length at most `|s| * n`, built from a
/// Hamiltonian path of the auxiliary reachability tournament on `s`.
pub fn unilateral_covering_walk(d: &Digraph, s: &BTreeSet<u32>) -> Result<Walk> {
    if !is_unilateral(d) {
        return Err(Error::InvalidInput("digraph is not unilateral".into()));
    }
    let s_list: Vec<u32> = s.iter().copied().collect();
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("target set is empty".into()));
    }
    if s_list.len() == 1 {
        return Ok(Walk(vec![s_list[0]]));
    }
    let empty = BTreeSet::new();
    let k = s_list.len();
    let mut aux = Vec::new();
    for i in 0..k {
        let reach = d.reachable(&[s_list[i]], &empty);
        for j in (i + 1)..k {
            if reach[s_list[j] as usize] {
                aux.push((i as u32, j as u32));
            } else {
                aux.push((j as u32, i as u32));
            }
        }
    }
    let aux = Digraph::new(k, aux);
    let (ham, _) = tournament_ham_path(&aux)?;
    let mut walk: Vec<u32> = Vec::new();
    for w in ham.0.windows(2) {
        let (a, b) = (s_list[w[0] as usize], s_list[w[1] as usize]);
        let seg = d
            .bfs_path(&[a], &BTreeSet::from([b]), &empty)
            .ok_or_else(|| Error::Internal(format!("tournament arc {a}->{b} without a path")))?;
        if walk.is_empty() {
            walk.extend(seg);
        } else {
            walk.extend(&seg[1..]);
        }
    }
    if walk.is_empty() {
        walk.push(s_list[ham.0[0] as usize]);
    }
    debug_assert!(walk.len() - 1 <= k * d.n());
    Ok(Walk(walk))
}
