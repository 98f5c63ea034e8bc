//! Temporal digraphs, temporal walks and paths, the routing temporal digraph
//! of a linkage crossing a sequence of disjoint blocks, and H-routing
//! verification for both digraph and temporal hosts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::digraph::{Digraph, SubDigraph};
use crate::error::{Error, Result};
use crate::linkage::Linkage;

/// Largest pattern size accepted by the H-routing verifier.
pub const PATTERN_CAP: usize = 12;

/// Cap on `|S|` for the exact covering-walk dynamic program.
pub const COVER_DP_CAP: usize = 20;

/// A fixed vertex set with an ordered sequence of arc-set layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalDigraph {
    n: usize,
    layers: Vec<BTreeSet<(u32, u32)>>,
}

impl TemporalDigraph {
    pub fn new(n: usize, layers: Vec<Vec<(u32, u32)>>) -> Self {
        let layers = layers
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .inspect(|&(u, v)| {
                        assert!(
                            (u as usize) < n && (v as usize) < n,
                            "layer arc out of range"
                        )
                    })
                    .filter(|(u, v)| u != v)
                    .collect()
            })
            .collect();
        TemporalDigraph { n, layers }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lifetime(&self) -> usize {
        self.layers.len()
    }

    /// Layer `t` (1-based timestep) as a digraph.
    pub fn layer(&self, t: usize) -> Digraph {
        Digraph::new(self.n, self.layers[t - 1].iter().copied())
    }

    pub fn layer_arcs(&self, t: usize) -> &BTreeSet<(u32, u32)> {
        &self.layers[t - 1]
    }

    pub fn has_arc_at(&self, t: usize, u: u32, v: u32) -> bool {
        t >= 1 && t <= self.lifetime() && self.layers[t - 1].contains(&(u, v))
    }

    /// Temporal subgraph keeping only the (1-based) timesteps in `keep`,
    /// renumbered consecutively.
    pub fn select_layers(&self, keep: &[usize]) -> TemporalDigraph {
        TemporalDigraph {
            n: self.n,
            layers: keep.iter().map(|&t| self.layers[t - 1].clone()).collect(),
        }
    }

    /// Contiguous window of timesteps `lo..=hi`, renumbered from 1.
    pub fn window(&self, lo: usize, hi: usize) -> TemporalDigraph {
        self.select_layers(&(lo..=hi).collect::<Vec<_>>())
    }
}

/// A temporal walk: steps `(v_i, t_i)` where the arc `(v_i, v_{i+1})` lives
/// in layer `t_i` and timesteps strictly increase up to the lifetime. The
/// final step's time is the arrival marker, so a walk with `m` arcs needs
/// lifetime at least `m + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalWalk {
    pub steps: Vec<(u32, u32)>,
}

impl TemporalWalk {
    pub fn single(v: u32) -> TemporalWalk {
        TemporalWalk {
            steps: vec![(v, 1)],
        }
    }

    pub fn start(&self) -> u32 {
        self.steps.first().expect("walk is nonempty").0
    }

    pub fn end(&self) -> u32 {
        self.steps.last().expect("walk is nonempty").0
    }

    pub fn arc_count(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn departs(&self) -> u32 {
        self.steps.first().unwrap().1
    }

    pub fn arrives(&self) -> u32 {
        self.steps.last().unwrap().1
    }

    pub fn vertices(&self) -> BTreeSet<u32> {
        self.steps.iter().map(|s| s.0).collect()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.steps.iter().any(|s| s.0 == v)
    }

    pub fn is_valid(&self, t: &TemporalDigraph) -> bool {
        if self.steps.is_empty() {
            return false;
        }
        for w in self.steps.windows(2) {
            let ((u, tu), (v, tv)) = (w[0], w[1]);
            if tu >= tv || !t.has_arc_at(tu as usize, u, v) {
                return false;
            }
        }
        if self.steps.len() > 1 && self.arrives() as usize > t.lifetime() {
            return false;
        }
        true
    }

    /// A temporal path repeats no vertex.
    pub fn is_path(&self, t: &TemporalDigraph) -> bool {
        self.is_valid(t) && self.vertices().len() == self.steps.len()
    }

    /// Loop-erased version: same endpoints, no repeated vertex, retained
    /// steps re-timed at their latest pass so timesteps stay increasing.
    pub fn loop_erased(&self) -> TemporalWalk {
        if self.steps.len() <= 1 {
            return self.clone();
        }
        let mut stack: Vec<(u32, u32)> = vec![self.steps[0]];
        for i in 1..self.steps.len() {
            let (v, tv) = self.steps[i];
            if let Some(pos) = stack.iter().position(|s| s.0 == v) {
                stack.truncate(pos + 1);
                stack[pos].1 = tv;
            } else {
                stack.push((v, tv));
            }
        }
        // Fix departure times: each retained step must carry the time of the
        // arc leaving it in the original walk after its recorded arrival.
        // The stack already holds each vertex's latest visit time, and the
        // original times were strictly increasing, so they remain so.
        TemporalWalk { steps: stack }
    }

    /// Concatenation; `other` must start where `self` ends, strictly later.
    pub fn concat(&self, other: &TemporalWalk) -> Result<TemporalWalk> {
        if self.end() != other.start() {
            return Err(Error::InvalidInput(
                "walk concatenation endpoints differ".into(),
            ));
        }
        let mut steps = self.steps.clone();
        steps.pop();
        steps.extend(other.steps.iter().copied());
        Ok(TemporalWalk { steps })
    }

    /// The sub-walk between step indices `i..=j`.
    pub fn slice(&self, i: usize, j: usize) -> TemporalWalk {
        TemporalWalk {
            steps: self.steps[i..=j].to_vec(),
        }
    }

    /// The walk as its own temporal digraph: same vertex count, `lifetime`
    /// layers, one arc per layer used.
    pub fn as_temporal_digraph(&self, n: usize, lifetime: usize) -> TemporalDigraph {
        let mut layers = vec![Vec::new(); lifetime];
        for w in self.steps.windows(2) {
            layers[w[0].1 as usize - 1].push((w[0].0, w[1].0));
        }
        TemporalDigraph::new(n, layers)
    }
}

/// Earliest-arrival temporal reachability from `start`, using arcs at
/// timesteps in `lo..=hi` that are strictly later than `start_ready`, and
/// avoiding `forbidden` everywhere.
pub struct TemporalSearch {
    best: Vec<Option<u32>>,
    parent: Vec<Option<(u32, u32)>>,
    start: u32,
    start_ready: u32,
}

impl TemporalSearch {
    pub fn run(
        t: &TemporalDigraph,
        start: u32,
        start_ready: u32,
        lo: usize,
        hi: usize,
        forbidden: &BTreeSet<u32>,
    ) -> TemporalSearch {
        let mut best: Vec<Option<u32>> = vec![None; t.n()];
        let mut parent: Vec<Option<(u32, u32)>> = vec![None; t.n()];
        if !forbidden.contains(&start) {
            best[start as usize] = Some(start_ready);
        }
        let hi = hi.min(t.lifetime());
        for tau in lo.max(1)..=hi {
            for &(u, v) in t.layer_arcs(tau) {
                if forbidden.contains(&u) || forbidden.contains(&v) {
                    continue;
                }
                let Some(tu) = best[u as usize] else { continue };
                if (tu as usize) < tau && best[v as usize].is_none() {
                    best[v as usize] = Some(tau as u32);
                    parent[v as usize] = Some((u, tau as u32));
                }
            }
        }
        TemporalSearch {
            best,
            parent,
            start,
            start_ready,
        }
    }

    pub fn reaches(&self, v: u32) -> bool {
        self.best[v as usize].is_some()
    }

    /// Earliest-arrival walk to `v`; loop-free by construction of the parent
    /// tree, hence a temporal path.
    pub fn walk_to(&self, v: u32) -> Option<TemporalWalk> {
        self.best[v as usize]?;
        if v == self.start {
            return Some(TemporalWalk {
                steps: vec![(v, self.start_ready.max(1))],
            });
        }
        let mut rev: Vec<(u32, u32)> = Vec::new(); // (vertex, arc time into it)
        let mut cur = v;
        while cur != self.start {
            let (u, tau) = self.parent[cur as usize]?;
            rev.push((cur, tau));
            cur = u;
        }
        let mut steps = Vec::with_capacity(rev.len() + 1);
        let first_arc_time = rev.last().unwrap().1;
        steps.push((self.start, first_arc_time));
        for i in (0..rev.len()).rev() {
            let (w, tau) = rev[i];
            let step_time = if i == 0 { tau + 1 } else { rev[i - 1].1 };
            steps.push((w, step_time));
        }
        Some(TemporalWalk { steps })
    }
}

/// Routing temporal digraph of a linkage through a sequence of pairwise
/// disjoint blocks: vertex `i` is the `i`-th path; layer `j` holds the arc
/// `(a, b)` iff block `j` contains a path from `V(P_a)` to `V(P_b)` that is
/// internally disjoint from the whole linkage. Witness connector paths and
/// the per-block span of every path are retained so temporal walks can be
/// realised as host walks.
#[derive(Debug, Clone)]
pub struct RoutingTemporalDigraph {
    pub tdg: TemporalDigraph,
    pub linkage: Linkage,
    pub blocks: Vec<SubDigraph>,
    /// witness[(layer_1based, a, b)] = host connector path.
    pub witnesses: BTreeMap<(usize, u32, u32), Vec<u32>>,
    /// spans[path][block] = (first, last) index of the path inside the block.
    pub spans: Vec<Vec<Option<(usize, usize)>>>,
}

/// Builds the routing temporal digraph, checking that every path crosses the
/// blocks in an orderly fashion (block indices non-decreasing along it).
pub fn build_rtd(l: &Linkage, blocks: &[SubDigraph]) -> Result<RoutingTemporalDigraph> {
    for (i, x) in blocks.iter().enumerate() {
        for y in blocks.iter().skip(i + 1) {
            if !x.is_disjoint(y) {
                return Err(Error::InvalidInput(
                    "blocks are not pairwise disjoint".into(),
                ));
            }
        }
    }
    let q = blocks.len();
    let mut spans: Vec<Vec<Option<(usize, usize)>>> = Vec::with_capacity(l.order());
    for (pi, path) in l.paths().iter().enumerate() {
        let mut span = vec![None; q];
        let mut current: Option<usize> = None;
        for (idx, &v) in path.iter().enumerate() {
            if let Some(b) = blocks.iter().position(|blk| blk.contains(v)) {
                if let Some(c) = current {
                    if b < c {
                        return Err(Error::NotOrderlyCrossing { path: pi, block: b });
                    }
                }
                current = Some(b);
                let entry = span[b].get_or_insert((idx, idx));
                entry.1 = idx;
            }
        }
        spans.push(span);
    }

    let linkage_vertices = l.vertex_set();
    let mut layers = Vec::with_capacity(q);
    let mut witnesses = BTreeMap::new();
    for (j, block) in blocks.iter().enumerate() {
        let bd = block_digraph(block);
        let mut arcs = Vec::new();
        for a in 0..l.order() {
            for b in 0..l.order() {
                if a == b {
                    continue;
                }
                let from: Vec<u32> = l
                    .path(a)
                    .iter()
                    .copied()
                    .filter(|v| block.contains(*v))
                    .collect();
                let to: BTreeSet<u32> = l
                    .path(b)
                    .iter()
                    .copied()
                    .filter(|v| block.contains(*v))
                    .collect();
                if from.is_empty() || to.is_empty() {
                    continue;
                }
                if let Some(w) = connector(&bd, &from, &to, &linkage_vertices) {
                    arcs.push((a as u32, b as u32));
                    witnesses.insert((j + 1, a as u32, b as u32), w);
                }
            }
        }
        layers.push(arcs);
    }
    Ok(RoutingTemporalDigraph {
        tdg: TemporalDigraph::new(l.order(), layers),
        linkage: l.clone(),
        blocks: blocks.to_vec(),
        witnesses,
        spans,
    })
}

fn block_digraph(block: &SubDigraph) -> Digraph {
    let n = block
        .vertices
        .iter()
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(0);
    Digraph::new(n, block.arcs.iter().copied())
}

/// Shortest path inside a block from one path's vertices to another's whose
/// interior avoids every linkage vertex.
fn connector(
    bd: &Digraph,
    from: &[u32],
    to: &BTreeSet<u32>,
    linkage_vertices: &BTreeSet<u32>,
) -> Option<Vec<u32>> {
    let mut prev: Vec<Option<u32>> = vec![None; bd.n()];
    let mut seen = vec![false; bd.n()];
    let mut queue = std::collections::VecDeque::new();
    for &s in from {
        if (s as usize) < bd.n() && !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let expandable = from.contains(&u) || !linkage_vertices.contains(&u);
        if !expandable {
            continue;
        }
        if (u as usize) >= bd.n() {
            continue;
        }
        for &w in bd.out_neighbours(u) {
            if seen[w as usize] {
                continue;
            }
            if to.contains(&w) {
                let mut path = vec![w, u];
                let mut cur = u;
                while let Some(p) = prev[cur as usize] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            if linkage_vertices.contains(&w) {
                continue;
            }
            seen[w as usize] = true;
            prev[w as usize] = Some(u);
            queue.push_back(w);
        }
    }
    None
}

impl RoutingTemporalDigraph {
    /// Host digraph: the linkage union plus all blocks on `n` host vertices.
    pub fn host_digraph(&self, n: usize) -> Digraph {
        let mut arcs: Vec<(u32, u32)> = self.linkage.arcs().collect();
        for b in &self.blocks {
            arcs.extend(b.arcs.iter().copied());
        }
        Digraph::new(n, arcs)
    }

    /// Realise a temporal walk of the routing digraph as a host walk: each
    /// arc becomes its witness connector, consecutive connectors are joined
    /// by riding forward along the intermediate path.
    pub fn realize(&self, walk: &TemporalWalk) -> Result<Vec<u32>> {
        if walk.steps.len() == 1 {
            return Ok(self.linkage.path(walk.start() as usize).to_vec());
        }
        let mut host: Vec<u32> = Vec::new();
        let mut prev_exit: Option<(usize, usize)> = None; // (path, index on path)
        for w in walk.steps.windows(2) {
            let ((a, ta), (b, _)) = (w[0], w[1]);
            let witness = self.witnesses.get(&(ta as usize, a, b)).ok_or_else(|| {
                Error::Internal(format!("no witness for arc ({a},{b}) at layer {ta}"))
            })?;
            let entry = position_on(self.linkage.path(a as usize), witness[0])?;
            if let Some((pa, idx)) = prev_exit {
                debug_assert_eq!(pa, a as usize);
                if idx > entry {
                    return Err(Error::Internal(
                        "ride would move backwards along a path".into(),
                    ));
                }
                host.extend(&self.linkage.path(a as usize)[idx..entry]);
            }
            host.extend(&witness[..witness.len() - 1]);
            let exit = position_on(self.linkage.path(b as usize), *witness.last().unwrap())?;
            prev_exit = Some((b as usize, exit));
        }
        if let Some((pb, idx)) = prev_exit {
            host.push(self.linkage.path(pb)[idx]);
        }
        Ok(host)
    }
}

fn position_on(path: &[u32], v: u32) -> Result<usize> {
    path.iter()
        .position(|&x| x == v)
        .ok_or_else(|| Error::Internal(format!("vertex {v} is not on the expected path")))
}

/// Pattern digraphs accepted by the H-routing verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Path(usize),
    BidirectedPath(usize),
    Cycle(usize),
    BidirectedClique(usize),
}

impl Pattern {
    pub fn size(&self) -> usize {
        match *self {
            Pattern::Path(k)
            | Pattern::BidirectedPath(k)
            | Pattern::Cycle(k)
            | Pattern::BidirectedClique(k) => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Pattern::Path(_) => "path",
            Pattern::BidirectedPath(_) => "bidirected-path",
            Pattern::Cycle(_) => "cycle",
            Pattern::BidirectedClique(_) => "bidirected-clique",
        }
    }

    pub fn parse(family: &str, k: usize) -> Result<Pattern> {
        Ok(match family {
            "path" => Pattern::Path(k),
            "bidirected-path" => Pattern::BidirectedPath(k),
            "cycle" => Pattern::Cycle(k),
            "bidirected-clique" => Pattern::BidirectedClique(k),
            other => return Err(Error::UnsupportedPattern(other.into())),
        })
    }

    /// The dominating requirement per ordered endpoint pair:
    /// `(from, to, allowed interior pattern vertices)`. Demands with fewer
    /// allowed interior vertices imply all weaker ones, so for the
    /// bidirected clique only the empty-interior pair demands remain; for
    /// path-like patterns the unique simple path per pair is emitted.
    fn requirements(&self) -> Vec<(usize, usize, BTreeSet<usize>)> {
        let k = self.size();
        let mut out = Vec::new();
        match self {
            Pattern::Path(_) => {
                for i in 0..k {
                    for j in (i + 1)..k {
                        out.push((i, j, (i..=j).collect()));
                    }
                }
            }
            Pattern::BidirectedPath(_) => {
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            let (lo, hi) = (i.min(j), i.max(j));
                            out.push((i, j, (lo..=hi).collect()));
                        }
                    }
                }
            }
            Pattern::Cycle(_) => {
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            let mut allowed = BTreeSet::new();
                            let mut cur = i;
                            loop {
                                allowed.insert(cur);
                                if cur == j {
                                    break;
                                }
                                cur = (cur + 1) % k;
                            }
                            out.push((i, j, allowed));
                        }
                    }
                }
            }
            Pattern::BidirectedClique(_) => {
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            out.push((i, j, BTreeSet::from([i, j])));
                        }
                    }
                }
            }
        }
        out
    }
}

/// A candidate H-routing: a bijection from pattern vertices onto distinct
/// host vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HRouting {
    pub pattern: Pattern,
    /// `map[i]` is the host vertex carrying pattern vertex `i`.
    pub map: Vec<u32>,
}

impl HRouting {
    pub fn new(pattern: Pattern, map: Vec<u32>) -> Result<HRouting> {
        if map.len() != pattern.size() {
            return Err(Error::InvalidInput(
                "routing map size differs from pattern".into(),
            ));
        }
        let set: BTreeSet<u32> = map.iter().copied().collect();
        if set.len() != map.len() {
            return Err(Error::InvalidInput("routing map is not injective".into()));
        }
        Ok(HRouting { pattern, map })
    }

    pub fn image(&self) -> BTreeSet<u32> {
        self.map.iter().copied().collect()
    }
}

/// Host of an H-routing check.
#[derive(Clone, Copy)]
pub enum Host<'a> {
    Static(&'a Digraph),
    Temporal(&'a TemporalDigraph),
}

/// Witness connection for one pattern path.
#[derive(Debug, Clone)]
pub enum Witness {
    Static(Vec<u32>),
    Temporal(TemporalWalk),
}

#[derive(Debug, Clone)]
pub struct RoutingCheck {
    pub ok: bool,
    /// One host witness per checked pattern-path demand, keyed by pattern
    /// endpoints.
    pub witnesses: Vec<(usize, usize, Witness)>,
    /// First failing pattern path, if any.
    pub failing: Option<(usize, usize)>,
}

/// Verifies the H-routing condition: for every simple `u`-`v` path of the
/// pattern there is a (temporal) host path from `map[u]` to `map[v]` that
/// avoids the images of all pattern vertices off the path.
pub fn check_h_routing(host: Host, routing: &HRouting) -> Result<RoutingCheck> {
    if routing.pattern.size() > PATTERN_CAP {
        return Err(Error::UnsupportedPattern(format!(
            "pattern of size {} exceeds cap {PATTERN_CAP}",
            routing.pattern.size()
        )));
    }
    let image = routing.image();
    let mut witnesses = Vec::new();
    for (i, j, allowed) in routing.pattern.requirements() {
        let from = routing.map[i];
        let to = routing.map[j];
        let forbidden: BTreeSet<u32> = image
            .iter()
            .copied()
            .filter(|v| !allowed.iter().any(|&p| routing.map[p] == *v))
            .collect();
        let witness = match host {
            Host::Static(d) => d
                .bfs_path(&[from], &BTreeSet::from([to]), &forbidden)
                .map(Witness::Static),
            Host::Temporal(t) => {
                let search =
                    TemporalSearch::run(t, from, 0, 1, t.lifetime().saturating_sub(1), &forbidden);
                search.walk_to(to).map(|w| {
                    let p = w.loop_erased();
                    debug_assert!(p.is_path(t));
                    Witness::Temporal(p)
                })
            }
        };
        match witness {
            Some(w) => witnesses.push((i, j, w)),
            None => {
                return Ok(RoutingCheck {
                    ok: false,
                    witnesses,
                    failing: Some((i, j)),
                });
            }
        }
    }
    Ok(RoutingCheck {
        ok: true,
        witnesses,
        failing: None,
    })
}

#[derive(Debug, Clone)]
pub struct LiftingReport {
    pub per_layer: Vec<bool>,
    pub all_layers: bool,
    pub temporal_ok: bool,
    /// The lifting guarantee: whenever every layer carries the routing and
    /// the lifetime is at least the vertex count, the temporal check holds.
    pub implication_holds: bool,
}

/// Checks `routing` against every layer and against the temporal host, and
/// reports whether the lifting guarantee held.
pub fn check_lifting(t: &TemporalDigraph, routing: &HRouting) -> Result<LiftingReport> {
    let mut per_layer = Vec::with_capacity(t.lifetime());
    for tau in 1..=t.lifetime() {
        let layer = t.layer(tau);
        per_layer.push(check_h_routing(Host::Static(&layer), routing)?.ok);
    }
    let all_layers = per_layer.iter().all(|&b| b);
    let temporal_ok = check_h_routing(Host::Temporal(t), routing)?.ok;
    let applies = all_layers && t.lifetime() >= t.n();
    Ok(LiftingReport {
        per_layer,
        all_layers,
        temporal_ok,
        implication_holds: !applies || temporal_ok,
    })
}

/// Temporal walk visiting all of `s`, from `v` to `s_target`, in a temporal
/// digraph whose layers are all strongly connected. Built by stitching
/// earliest-arrival segments; the stated guarantee applies when the lifetime
/// is at least `|S| * (n - 1) + 1` under the strict timestep reading.
pub fn covering_walk_strong(
    t: &TemporalDigraph,
    s: &BTreeSet<u32>,
    v: u32,
    s_target: u32,
) -> Result<TemporalWalk> {
    if !s.contains(&s_target) {
        return Err(Error::InvalidParameter("target must belong to S".into()));
    }
    for tau in 1..=t.lifetime() {
        if !t.layer(tau).is_strongly_connected() {
            return Err(Error::InvalidInput(format!(
                "layer {tau} is not strongly connected"
            )));
        }
    }
    let mut order: Vec<u32> = s.iter().copied().filter(|&x| x != s_target).collect();
    order.push(s_target);
    if order.len() == 1 && v == s_target {
        return Ok(TemporalWalk::single(v));
    }
    let mut walk: Option<TemporalWalk> = None;
    let mut at = v;
    let mut ready = 0u32;
    let empty = BTreeSet::new();
    for &next in &order {
        if next == at {
            walk.get_or_insert_with(|| TemporalWalk::single(at));
            continue;
        }
        let search = TemporalSearch::run(
            t,
            at,
            ready,
            ready as usize + 1,
            t.lifetime().saturating_sub(1),
            &empty,
        );
        let seg = search.walk_to(next).ok_or_else(|| {
            Error::GuaranteeUnavailable(format!(
                "could not extend covering walk to {next}; lifetime {} below the bound {}",
                t.lifetime(),
                s.len() * t.n().saturating_sub(1) + 1
            ))
        })?;
        ready = seg.steps[seg.steps.len() - 2].1;
        at = next;
        walk = Some(match walk {
            None => seg,
            Some(w) => w.concat(&seg)?,
        });
    }
    let walk = walk.expect("S is nonempty");
    debug_assert!(walk.is_valid(t));
    Ok(walk)
}

/// Exact dynamic program over `(vertex, covered subset)` states for a
/// temporal walk covering `s` in a temporal digraph with unilateral layers.
pub fn covering_walk_unilateral(t: &TemporalDigraph, s: &BTreeSet<u32>) -> Result<TemporalWalk> {
    if s.len() > COVER_DP_CAP {
        return Err(Error::CapExceeded(format!(
            "covering DP over {} targets exceeds cap {COVER_DP_CAP}",
            s.len()
        )));
    }
    for tau in 1..=t.lifetime() {
        if !crate::digraph::is_unilateral(&t.layer(tau)) {
            return Err(Error::InvalidInput(format!(
                "layer {tau} is not unilateral"
            )));
        }
    }
    let s_list: Vec<u32> = s.iter().copied().collect();
    let bit = |v: u32| -> u64 { s_list.iter().position(|&x| x == v).map_or(0, |i| 1u64 << i) };
    let full: u64 = if s_list.is_empty() {
        0
    } else {
        (1u64 << s_list.len()) - 1
    };
    let mut best: CoverDp = HashMap::new();
    for v in 0..t.n() as u32 {
        best.insert((v, bit(v)), (0, None));
    }
    if let Some(goal) = find_goal(&best, full) {
        return Ok(reconstruct(&best, goal));
    }
    let hi = t.lifetime().saturating_sub(1);
    for tau in 1..=hi {
        let mut updates: Vec<(CoverState, CoverEntry)> = Vec::new();
        for &(u, w) in t.layer_arcs(tau) {
            for (&(sv, mask), &(time, _)) in best.iter() {
                if sv != u || time >= tau as u32 {
                    continue;
                }
                let nstate: CoverState = (w, mask | bit(w));
                if !best.contains_key(&nstate) {
                    updates.push((nstate, (tau as u32, Some(((u, mask), tau as u32)))));
                }
            }
        }
        updates.sort_by_key(|(st, _)| *st);
        for (st, val) in updates {
            best.entry(st).or_insert(val);
        }
        if let Some(goal) = find_goal(&best, full) {
            return Ok(reconstruct(&best, goal));
        }
    }
    Err(Error::NotFound(format!(
        "no temporal walk covers all {} targets within lifetime {}",
        s_list.len(),
        t.lifetime()
    )))
}

/// DP state: (vertex, covered mask) -> (last arc time, parent state + arc).
type CoverState = (u32, u64);
type CoverEntry = (u32, Option<(CoverState, u32)>);
type CoverDp = HashMap<CoverState, CoverEntry>;

fn find_goal(best: &CoverDp, full: u64) -> Option<(u32, u64)> {
    best.keys().filter(|&&(_, m)| m == full).min().copied()
}

fn reconstruct(best: &CoverDp, goal: (u32, u64)) -> TemporalWalk {
    let mut rev: Vec<(u32, u32)> = Vec::new();
    let mut cur = goal;
    loop {
        let &(_, parent) = best.get(&cur).unwrap();
        match parent {
            Some((prev, tau)) => {
                rev.push((cur.0, tau));
                cur = prev;
            }
            None => break,
        }
    }
    if rev.is_empty() {
        return TemporalWalk::single(cur.0);
    }
    let mut steps = Vec::with_capacity(rev.len() + 1);
    steps.push((cur.0, rev.last().unwrap().1));
    for i in (0..rev.len()).rev() {
        let (v, tau) = rev[i];
        let step_time = if i == 0 { tau + 1 } else { rev[i - 1].1 };
        steps.push((v, step_time));
    }
    TemporalWalk { steps }
}
