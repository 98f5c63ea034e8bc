//! Paths of r-order-linked and well-linked sets: definition checkers,
//! internal routing, merging, flavor conversion, grid extraction, the
//! web-to-path-of-sets constructions and the witness-driven assembly of a
//! path of well-linked sets with a back-certificate.

use std::collections::{BTreeMap, BTreeSet};

use crate::digraph::{Digraph, OrderedVertexSet, SubDigraph};
use crate::error::{Error, Result};
use crate::extract::{
    path_or_clique_routing, pk_routing_from_walk, well_linked_sublinkage, PathOrClique,
};
use crate::gridweb::{acyclic_grid, StructureKind, StructureMeta, StructuredPair};
use crate::linkage::{check_well_linked, menger, pinned_linkage, Linkage, WELL_LINKED_CAP};
use crate::temporal::{
    build_rtd, check_h_routing, covering_walk_unilateral, HRouting, Host, Pattern,
    RoutingTemporalDigraph, TemporalWalk, Witness,
};

/// Cap on terminal width for the exhaustive order-linkedness check.
pub const ORDER_LINKED_CAP: usize = 8;

/// Search budget for the exact vertex-on-a-path strictness check.
const THROUGH_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    OrderLinked(usize),
    WellLinked,
}

/// One cluster: a subgraph fragment with ordered terminal sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub sub: SubDigraph,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

impl Cluster {
    pub fn digraph(&self, n: usize) -> Digraph {
        self.sub.to_digraph(n)
    }
}

/// A path of linked sets: disjoint clusters joined by full-order linkages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathOfSets {
    pub n: usize,
    pub clusters: Vec<Cluster>,
    pub links: Vec<Linkage>,
    pub flavor: Flavor,
    pub uniform: bool,
    pub strict: bool,
}

impl PathOfSets {
    pub fn width(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.a.len())
    }

    pub fn length(&self) -> usize {
        self.clusters.len().saturating_sub(1)
    }

    /// Union digraph of all clusters and linkages.
    pub fn to_digraph(&self) -> Digraph {
        let mut arcs: Vec<(u32, u32)> = Vec::new();
        for c in &self.clusters {
            arcs.extend(c.sub.arcs.iter().copied());
        }
        for l in &self.links {
            arcs.extend(l.arcs());
        }
        Digraph::new(self.n, arcs)
    }

    /// The sub-path-of-sets over clusters `i..=j` (shared storage cloned).
    pub fn slice(&self, i: usize, j: usize) -> PathOfSets {
        PathOfSets {
            n: self.n,
            clusters: self.clusters[i..=j].to_vec(),
            links: self.links[i..j].to_vec(),
            flavor: self.flavor,
            uniform: self.uniform,
            strict: self.strict,
        }
    }

    /// Orientation reversal: arcs flip, terminal sets swap, cluster order
    /// reverses. Well-linkedness statements reverse along with it.
    pub fn reverse(&self) -> PathOfSets {
        let clusters = self
            .clusters
            .iter()
            .rev()
            .map(|c| Cluster {
                sub: SubDigraph::new(
                    c.sub.vertices.iter().copied(),
                    c.sub.arcs.iter().map(|&(u, v)| (v, u)),
                ),
                a: c.b.clone(),
                b: c.a.clone(),
            })
            .collect();
        let links = self
            .links
            .iter()
            .rev()
            .map(|l| {
                let paths: Vec<Vec<u32>> = l
                    .paths()
                    .iter()
                    .map(|p| p.iter().rev().copied().collect())
                    .collect();
                Linkage::new(paths).expect("reversal keeps disjointness")
            })
            .collect();
        PathOfSets {
            n: self.n,
            clusters,
            links,
            flavor: self.flavor,
            uniform: self.uniform,
            strict: self.strict,
        }
    }
}

/// Witness bijection of an r-shift: the order-preserving positional pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftWitness {
    pub pairs: Vec<(u32, u32)>,
}

/// Checks whether `bp` is an r-shift of `ap` relative to the full ordered
/// sets: the positional pairing must never move an element to an earlier
/// index, move at most `r` elements off the identity, and preserve order.
pub fn check_r_shift(
    a: &OrderedVertexSet,
    b: &OrderedVertexSet,
    ap: &[u32],
    bp: &[u32],
    r: usize,
) -> Result<(bool, Option<ShiftWitness>)> {
    if ap.len() != bp.len() {
        return Err(Error::InvalidParameter("subset sizes differ".into()));
    }
    let pos_a: Vec<usize> = ap
        .iter()
        .map(|v| {
            a.position(*v)
                .ok_or_else(|| Error::InvalidParameter(format!("{v} not in A")))
        })
        .collect::<Result<_>>()?;
    let pos_b: Vec<usize> = bp
        .iter()
        .map(|v| {
            b.position(*v)
                .ok_or_else(|| Error::InvalidParameter(format!("{v} not in B")))
        })
        .collect::<Result<_>>()?;
    if pos_a.windows(2).any(|w| w[0] >= w[1]) || pos_b.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "subsets must be ordered sub-sequences".into(),
        ));
    }
    let mut moved = 0usize;
    for t in 0..ap.len() {
        if pos_a[t] > pos_b[t] {
            return Ok((false, None));
        }
        if pos_a[t] != pos_b[t] {
            moved += 1;
        }
    }
    if moved > r {
        return Ok((false, None));
    }
    let pairs = ap.iter().copied().zip(bp.iter().copied()).collect();
    Ok((true, Some(ShiftWitness { pairs })))
}

#[derive(Debug, Clone)]
pub struct OrderLinkedReport {
    pub order_linked: bool,
    /// Least failing subset pair.
    pub counterexample: Option<(Vec<u32>, Vec<u32>)>,
}

/// `A` is r-order-linked to `B` in `h` iff every r-shift demand between
/// ordered subsets is realised by a linkage with exactly the witness
/// pairing. The pairing is realised through exhaustive pinned search, so the
/// set sizes are capped. Takes explicitly ordered sets; for unordered sets
/// the existential over orderings is up to the caller.
pub fn check_order_linked(
    h: &Digraph,
    a: &OrderedVertexSet,
    b: &OrderedVertexSet,
    r: usize,
    cap: usize,
) -> Result<OrderLinkedReport> {
    if a.0.len() > cap || b.0.len() > cap {
        return Err(Error::CapExceeded(format!(
            "order-linkedness sets of sizes {} and {} exceed cap {cap}",
            a.0.len(),
            b.0.len()
        )));
    }
    let idx_a: Vec<usize> = (0..a.0.len()).collect();
    let idx_b: Vec<usize> = (0..b.0.len()).collect();
    for k in 1..=a.0.len().min(b.0.len()) {
        for ca in crate::testutil::combinations(&idx_a, k) {
            let ap: Vec<u32> = ca.iter().map(|&i| a.0[i]).collect();
            for cb in crate::testutil::combinations(&idx_b, k) {
                let bp: Vec<u32> = cb.iter().map(|&i| b.0[i]).collect();
                let (is_shift, witness) = check_r_shift(a, b, &ap, &bp, r)?;
                if !is_shift {
                    continue;
                }
                let witness = witness.unwrap();
                if pinned_linkage(h, &witness.pairs).is_none() {
                    return Ok(OrderLinkedReport {
                        order_linked: false,
                        counterexample: Some((ap, bp)),
                    });
                }
            }
        }
    }
    Ok(OrderLinkedReport {
        order_linked: true,
        counterexample: None,
    })
}

/// Exact check that `v` lies on some `A`-`B` path of `d`: enumerates `v`-`B`
/// paths with a step budget, testing `A`-reachability around each.
pub fn exists_path_through(
    d: &Digraph,
    a: &BTreeSet<u32>,
    b: &BTreeSet<u32>,
    v: u32,
) -> Result<bool> {
    if a.contains(&v) {
        let reach = d.reachable(&[v], &BTreeSet::new());
        return Ok(b.iter().any(|&x| reach[x as usize]));
    }
    if b.contains(&v) {
        let mut hit = false;
        for &s in a {
            if d.reachable(&[s], &BTreeSet::new())[v as usize] {
                hit = true;
                break;
            }
        }
        return Ok(hit);
    }
    let mut budget = THROUGH_BUDGET;
    let mut stack = vec![v];
    let mut on = vec![false; d.n()];
    on[v as usize] = true;
    fn dfs(
        d: &Digraph,
        a: &BTreeSet<u32>,
        b: &BTreeSet<u32>,
        v: u32,
        stack: &mut Vec<u32>,
        on: &mut Vec<bool>,
        budget: &mut usize,
    ) -> Result<bool> {
        if *budget == 0 {
            return Err(Error::CapExceeded(
                "strictness search budget exhausted".into(),
            ));
        }
        *budget -= 1;
        let cur = *stack.last().unwrap();
        if b.contains(&cur) {
            // The suffix path is fixed; can A reach v avoiding it (minus v)?
            let mut block: BTreeSet<u32> = stack.iter().copied().collect();
            block.remove(&v);
            let alive: Vec<u32> = a.iter().copied().filter(|x| !block.contains(x)).collect();
            let reach = d.reachable(&alive, &block);
            if reach[v as usize] {
                return Ok(true);
            }
        }
        let next: Vec<u32> = d.out_neighbours(cur).to_vec();
        for w in next {
            if on[w as usize] {
                continue;
            }
            stack.push(w);
            on[w as usize] = true;
            if dfs(d, a, b, v, stack, on, budget)? {
                return Ok(true);
            }
            stack.pop();
            on[w as usize] = false;
        }
        Ok(false)
    }
    dfs(d, a, b, v, &mut stack, &mut on, &mut budget)
}

#[derive(Debug, Clone)]
pub struct PosVerifyOutcome {
    pub ok: bool,
    pub violated: Option<String>,
}

/// Clause-by-clause verification of a path of linked sets, including the
/// uniformity and strictness flags when set.
pub fn verify_path_of_sets(pos: &PathOfSets) -> Result<PosVerifyOutcome> {
    let fail = |m: String| {
        Ok(PosVerifyOutcome {
            ok: false,
            violated: Some(m),
        })
    };
    if pos.clusters.is_empty() {
        return fail("a path of sets has at least one cluster".into());
    }
    if pos.links.len() + 1 != pos.clusters.len() {
        return fail("link count must be cluster count minus one".into());
    }
    let w = pos.width();
    // Cluster disjointness.
    for i in 0..pos.clusters.len() {
        for j in (i + 1)..pos.clusters.len() {
            if !pos.clusters[i].sub.is_disjoint(&pos.clusters[j].sub) {
                return fail(format!("clusters {i} and {j} share a vertex"));
            }
        }
    }
    for (i, c) in pos.clusters.iter().enumerate() {
        if c.a.len() != w || c.b.len() != w {
            return fail(format!("cluster {i} terminal sets differ from width {w}"));
        }
        let a_set: BTreeSet<u32> = c.a.iter().copied().collect();
        let b_set: BTreeSet<u32> = c.b.iter().copied().collect();
        if a_set.len() != w || b_set.len() != w || !a_set.is_disjoint(&b_set) {
            return fail(format!("cluster {i} terminal sets overlap or repeat"));
        }
        if !a_set.iter().chain(&b_set).all(|v| c.sub.contains(*v)) {
            return fail(format!("cluster {i} terminals leave the cluster"));
        }
        let d = c.digraph(pos.n);
        match pos.flavor {
            Flavor::OrderLinked(r) => {
                let rep = check_order_linked(
                    &d,
                    &OrderedVertexSet(c.a.clone()),
                    &OrderedVertexSet(c.b.clone()),
                    r,
                    ORDER_LINKED_CAP,
                )?;
                if !rep.order_linked {
                    return fail(format!("cluster {i} is not {r}-order-linked"));
                }
            }
            Flavor::WellLinked => {
                let rep = check_well_linked(&d, &a_set, &b_set, WELL_LINKED_CAP)?;
                if !rep.well_linked {
                    return fail(format!("cluster {i} is not well-linked"));
                }
            }
        }
        if pos.strict {
            for &v in &c.sub.vertices {
                if !exists_path_through(&d, &a_set, &b_set, v)? {
                    return fail(format!("cluster {i} vertex {v} lies on no terminal path"));
                }
            }
        }
    }
    // Links.
    let mut seen_link_vertices: BTreeSet<u32> = BTreeSet::new();
    for (i, l) in pos.links.iter().enumerate() {
        if l.order() != w {
            return fail(format!("link {i} has order {}, width is {w}", l.order()));
        }
        let b_set: BTreeSet<u32> = pos.clusters[i].b.iter().copied().collect();
        let a_next: BTreeSet<u32> = pos.clusters[i + 1].a.iter().copied().collect();
        if l.start_set() != b_set || l.end_set() != a_next {
            return fail(format!("link {i} endpoints differ from the terminal sets"));
        }
        for p in l.paths() {
            for (t, &v) in p.iter().enumerate() {
                let interior = t != 0 && t + 1 != p.len();
                for (j, c) in pos.clusters.iter().enumerate() {
                    let in_cluster = c.sub.contains(v);
                    if in_cluster && (interior || (j != i && j != i + 1)) {
                        return fail(format!("link {i} touches cluster {j} improperly at {v}"));
                    }
                }
                if interior && !seen_link_vertices.insert(v) {
                    return fail(format!("links share interior vertex {v}"));
                }
            }
        }
    }
    if pos.uniform {
        for (i, l) in pos.links.iter().enumerate() {
            for t in 0..w {
                let from = pos.clusters[i].b[t];
                let expect = pos.clusters[i + 1].a[t];
                if l.map(from) != Some(expect) {
                    return fail(format!(
                        "link {i} breaks the uniform ordering at position {t}"
                    ));
                }
            }
        }
    }
    Ok(PosVerifyOutcome {
        ok: true,
        violated: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Routing queries over a path of linked sets.
#[derive(Debug, Clone)]
pub enum PosQuery {
    /// Full-width terminal-to-terminal linkage.
    TerminalToTerminal {
        i: usize,
        side_i: Side,
        j: usize,
        side_j: Side,
    },
    /// Scattered sources with pairwise index gaps at least 2 into `A(S_j)`.
    ScatteredToA { x: Vec<u32>, j: usize },
    /// `B(S_i)` onto scattered targets with pairwise gaps at least 2.
    BToScattered { i: usize, y: Vec<u32> },
    /// Scattered to scattered with the same gap conditions on both sides.
    ScatteredToScattered { x: Vec<u32>, y: Vec<u32> },
    /// A linkage from `A(S_i) ∪ {v}` to `B(S_i)` inside cluster `i` with `v`
    /// among the starts.
    VertexAugmented { i: usize, v: u32 },
    /// Restriction to prescribed outer terminal sets; returns a new path of
    /// well-linked sets instead of a linkage.
    WidthRestrict { a0: Vec<u32>, b_ell: Vec<u32> },
}

#[derive(Debug, Clone)]
pub enum PosRouted {
    Linkage(Linkage),
    Restricted(PathOfSets),
}

/// Cluster/link index of a vertex, as used by the scattered-query gap rules.
fn f_value(pos: &PathOfSets, v: u32) -> Option<usize> {
    for (i, c) in pos.clusters.iter().enumerate() {
        if c.sub.contains(v) {
            return Some(i);
        }
    }
    for (i, l) in pos.links.iter().enumerate() {
        if l.contains_vertex(v) {
            return Some(i);
        }
    }
    None
}

/// Routes inside cluster `t` from the full entering set onto the cluster's
/// B-terminals: positional pinning for order-linked clusters (the 0-shift),
/// Menger for well-linked ones.
fn route_cluster_full(pos: &PathOfSets, t: usize) -> Result<Linkage> {
    let c = &pos.clusters[t];
    let d = c.digraph(pos.n);
    match pos.flavor {
        Flavor::OrderLinked(_) => {
            let pairs: Vec<(u32, u32)> = c.a.iter().copied().zip(c.b.iter().copied()).collect();
            pinned_linkage(&d, &pairs)
                .ok_or_else(|| Error::Internal(format!("cluster {t} refuses its identity 0-shift")))
        }
        Flavor::WellLinked => {
            let (l, _) = menger(
                &d,
                &c.a.iter().copied().collect(),
                &c.b.iter().copied().collect(),
            );
            if l.order() != pos.width() {
                return Err(Error::Internal(format!(
                    "cluster {t} is narrower than claimed"
                )));
            }
            Ok(l)
        }
    }
}

/// Routes a subset through cluster `t`: from `from ⊆ A(S_t)` onto either the
/// prescribed B-subset or a Menger-chosen one. Well-linked flavor only.
fn route_cluster_subset(
    pos: &PathOfSets,
    t: usize,
    from: &BTreeSet<u32>,
    to_b: Option<&BTreeSet<u32>>,
) -> Result<Linkage> {
    let c = &pos.clusters[t];
    let d = c.digraph(pos.n);
    let target: BTreeSet<u32> = match to_b {
        Some(tb) => tb.clone(),
        None => c.b.iter().copied().collect(),
    };
    let (l, _) = menger(&d, from, &target);
    if l.order() != from.len() {
        return Err(Error::FlavorMismatch(format!(
            "cluster {t} cannot route a subset of size {}",
            from.len()
        )));
    }
    match to_b {
        Some(_) => Ok(l),
        None => {
            // Trim to exactly the routed ends.
            Ok(l)
        }
    }
}

fn restrict_link(pos: &PathOfSets, i: usize, starts: &BTreeSet<u32>) -> Linkage {
    pos.links[i].restrict_to_starts(starts)
}

/// Subset routing across clusters: from `from ⊆ B(S_i)` to exactly
/// `to ⊆ A(S_j)`, `j >= i + 2`, fixing the pre-image at the final hop.
/// Well-linked flavor.
fn route_subsets_across(
    pos: &PathOfSets,
    i: usize,
    from: &BTreeSet<u32>,
    j: usize,
    to: &BTreeSet<u32>,
) -> Result<Linkage> {
    if j < i + 2 {
        return Err(Error::InvalidQuery(format!(
            "subset routing needs an intermediate cluster between {i} and {j}"
        )));
    }
    let mut acc = restrict_link(pos, i, from);
    for t in (i + 1)..j {
        let cur: BTreeSet<u32> = acc.end_set();
        let target = if t + 1 == j {
            // Pre-image of the final entry set under the last link.
            let mut pre = BTreeSet::new();
            for p in pos.links[t].paths() {
                if to.contains(p.last().unwrap()) {
                    pre.insert(p[0]);
                }
            }
            if pre.len() != to.len() {
                return Err(Error::InvalidQuery(
                    "target set does not sit under the last link".into(),
                ));
            }
            Some(pre)
        } else {
            None
        };
        let inner = route_cluster_subset(pos, t, &cur, target.as_ref())?;
        acc = acc.concat(&inner)?;
        let link = restrict_link(pos, t, &inner.end_set());
        acc = acc.concat(&link)?;
    }
    Ok(acc)
}

/// The augmented in-cluster linkage: order `k + 1`, with `v` among the
/// starts and the remaining starts on A-terminals.
fn augmented_cluster_linkage(pos: &PathOfSets, t: usize, k: usize, v: u32) -> Result<Linkage> {
    let c = &pos.clusters[t];
    let d = c.digraph(pos.n);
    if c.a.contains(&v) {
        let starts: BTreeSet<u32> =
            c.a.iter()
                .copied()
                .filter(|x| *x == v)
                .chain(c.a.iter().copied().filter(|x| *x != v).take(k))
                .collect();
        return route_cluster_subset(pos, t, &starts, None);
    }
    let base: BTreeSet<u32> = c.a.iter().copied().take(k + 1).collect();
    if base.len() < k + 1 {
        return Err(Error::InvalidQuery(format!(
            "cluster {t} is too narrow for the bundle"
        )));
    }
    let r = route_cluster_subset(pos, t, &base, None)?;
    // Walk from v towards B until first touching the linkage, then ride it.
    let b_set: BTreeSet<u32> = c.b.iter().copied().collect();
    let path = d.bfs_path(&[v], &b_set, &BTreeSet::new()).ok_or_else(|| {
        Error::InvalidQuery(format!("{v} reaches no B-terminal inside cluster {t}"))
    })?;
    let linkage_vertices = r.vertex_set();
    let mut prefix: Vec<u32> = Vec::new();
    let mut hit: Option<(usize, usize)> = None; // (path index in r, vertex index)
    'walk: for &x in &path {
        prefix.push(x);
        if x != v {
            for (pi, p) in r.paths().iter().enumerate() {
                if let Some(vi) = p.iter().position(|&y| y == x) {
                    hit = Some((pi, vi));
                    break 'walk;
                }
            }
            let _ = &linkage_vertices;
        }
    }
    let mut paths: Vec<Vec<u32>> = Vec::with_capacity(k + 1);
    match hit {
        None => {
            // v's path reaches B cleanly; keep k of the base paths.
            for p in r.paths().iter().take(k) {
                paths.push(p.clone());
            }
            paths.push(prefix);
        }
        Some((pi, vi)) => {
            for (qi, p) in r.paths().iter().enumerate() {
                if qi != pi {
                    paths.push(p.clone());
                }
            }
            let mut hybrid = prefix;
            hybrid.extend_from_slice(&r.path(pi)[vi + 1..]);
            paths.push(hybrid);
        }
    }
    Linkage::new(paths)
}

fn scattered_to_a(pos: &PathOfSets, x: &[u32], j: usize) -> Result<Linkage> {
    let (bundle, last_cluster) = scattered_bundle(pos, x)?;
    if last_cluster + 2 > j {
        return Err(Error::InvalidQuery(format!(
            "source in cluster {last_cluster} is too close to target cluster {j}"
        )));
    }
    // Final stretch into A(S_j): cross the remaining clusters freely.
    let mut cur = bundle;
    for t in (last_cluster + 1)..j {
        let link = restrict_link(pos, t - 1, &cur.end_set());
        cur = cur.concat(&link)?;
        let inner = route_cluster_subset(pos, t, &cur.end_set(), None)?;
        cur = cur.concat(&inner)?;
    }
    let last_link = restrict_link(pos, j - 1, &cur.end_set());
    cur = cur.concat(&last_link)?;
    Ok(cur)
}

/// The scattered-source bundle: sources are routed through their clusters'
/// augmented linkages and chained across, ending on a `B(S_r)`-subset of the
/// last source's cluster. Returns the bundle and that cluster index.
fn scattered_bundle(pos: &PathOfSets, x: &[u32]) -> Result<(Linkage, usize)> {
    if pos.flavor != Flavor::WellLinked {
        return Err(Error::FlavorMismatch(
            "scattered routing needs the well-linked flavor".into(),
        ));
    }
    // Normalise link vertices forward onto the next cluster's entry.
    let mut entries: Vec<(usize, u32, Vec<u32>)> = Vec::new(); // (cluster, vertex, ride prefix)
    for &v in x {
        let f = f_value(pos, v)
            .ok_or_else(|| Error::InvalidQuery(format!("{v} lies outside the path of sets")))?;
        if pos.clusters[f].sub.contains(v) {
            entries.push((f, v, vec![]));
        } else {
            let link_path = pos.links[f]
                .paths()
                .iter()
                .find(|p| p.contains(&v))
                .expect("f_value found it on this link");
            let at = link_path.iter().position(|&y| y == v).unwrap();
            let ride: Vec<u32> = link_path[at..].to_vec();
            entries.push((f + 1, *ride.last().unwrap(), ride));
        }
    }
    entries.sort_by_key(|e| e.0);
    for w in entries.windows(2) {
        if w[1].0 < w[0].0 + 2 {
            return Err(Error::InvalidQuery(format!(
                "scattered sources in clusters {} and {} are too close",
                w[0].0, w[1].0
            )));
        }
    }
    let mut acc: Option<Linkage> = None;
    let mut acc_cluster = 0usize;
    for (idx, (c_r, v, ride)) in entries.iter().enumerate() {
        let aug = augmented_cluster_linkage(pos, *c_r, idx, *v)?;
        let aug = if ride.is_empty() {
            aug
        } else {
            // Prepend the link ride onto v's path.
            let mut paths: Vec<Vec<u32>> = Vec::new();
            for p in aug.paths() {
                if p[0] == *v {
                    let mut joined = ride[..ride.len() - 1].to_vec();
                    joined.extend_from_slice(p);
                    paths.push(joined);
                } else {
                    paths.push(p.clone());
                }
            }
            Linkage::new(paths)?
        };
        match acc.take() {
            None => {
                acc = Some(aug);
            }
            Some(prior) => {
                let targets: BTreeSet<u32> = aug
                    .starts()
                    .into_iter()
                    .filter(|s| *s != *v && !ride.contains(s))
                    .collect();
                let cross =
                    route_subsets_across(pos, acc_cluster, &prior.end_set(), *c_r, &targets)?;
                let joined = prior.concat(&cross)?;
                // Merge bundles: prior paths continue through aug; v's path joins.
                let continued = joined.concat(&aug.restrict_to_starts(&targets))?;
                let v_path = aug
                    .paths()
                    .iter()
                    .find(|p| !targets.contains(&p[0]))
                    .cloned()
                    .ok_or_else(|| Error::Internal("augmented bundle lost its new path".into()))?;
                let mut all = continued.paths().to_vec();
                all.push(v_path);
                acc = Some(Linkage::new(all)?);
            }
        }
        acc_cluster = *c_r;
    }
    let bundle = acc.ok_or_else(|| Error::InvalidQuery("no sources given".into()))?;
    Ok((bundle, acc_cluster))
}

/// Routes a query through the path of sets; output contracts (endpoints,
/// disjointness) are asserted on every success.
pub fn pos_linkage(pos: &PathOfSets, query: &PosQuery) -> Result<PosRouted> {
    match query {
        PosQuery::TerminalToTerminal {
            i,
            side_i,
            j,
            side_j,
        } => {
            if i > j || (i == j && !(matches!(side_i, Side::A) && matches!(side_j, Side::B))) {
                return Err(Error::InvalidQuery("query must run forward".into()));
            }
            let mut acc: Option<Linkage> = None;
            if matches!(side_i, Side::A) {
                acc = Some(route_cluster_full(pos, *i)?);
            }
            for t in *i..*j {
                let link = &pos.links[t];
                acc = Some(match acc {
                    None => link.clone(),
                    Some(l) => l.concat(link)?,
                });
                if t + 1 < *j || matches!(side_j, Side::B) {
                    let inner = route_cluster_full(pos, t + 1)?;
                    acc = Some(acc.unwrap().concat(&inner)?);
                }
            }
            let out = acc.ok_or_else(|| Error::InvalidQuery("empty query".into()))?;
            debug_assert_eq!(out.order(), pos.width());
            Ok(PosRouted::Linkage(out))
        }
        PosQuery::ScatteredToA { x, j } => Ok(PosRouted::Linkage(scattered_to_a(pos, x, *j)?)),
        PosQuery::BToScattered { i, y } => {
            let rev = pos.reverse();
            let j_rev = pos.clusters.len() - 1 - i;
            let got = scattered_to_a(&rev, y, j_rev)?;
            let back: Vec<Vec<u32>> = got
                .paths()
                .iter()
                .map(|p| p.iter().rev().copied().collect())
                .collect();
            Ok(PosRouted::Linkage(Linkage::new(back)?))
        }
        PosQuery::ScatteredToScattered { x, y } => {
            if pos.flavor != Flavor::WellLinked {
                return Err(Error::FlavorMismatch(
                    "scattered routing needs the well-linked flavor".into(),
                ));
            }
            let fx: Vec<usize> = x
                .iter()
                .map(|v| {
                    f_value(pos, *v).ok_or_else(|| Error::InvalidQuery(format!("{v} outside")))
                })
                .collect::<Result<_>>()?;
            let fy: Vec<usize> = y
                .iter()
                .map(|v| {
                    f_value(pos, *v).ok_or_else(|| Error::InvalidQuery(format!("{v} outside")))
                })
                .collect::<Result<_>>()?;
            let rx = fx.iter().copied().max().unwrap_or(0);
            let ry = fy.iter().copied().min().unwrap_or(0);
            for (a, b) in fx.iter().flat_map(|a| fy.iter().map(move |b| (*a, *b))) {
                if a + 2 > b {
                    return Err(Error::InvalidQuery(format!(
                        "gap condition fails between source cluster {a} and target cluster {b}"
                    )));
                }
            }
            // Forward bundle from X ending at B(S_rx); backward bundle
            // from Y starting at A(S_ry); an across-routing joins them.
            let (fwd, fwd_cluster) = scattered_bundle(pos, x)?;
            debug_assert_eq!(fwd_cluster, rx);
            let rev = pos.reverse();
            let (bwd_rev, bwd_cluster) = scattered_bundle(&rev, y)?;
            debug_assert_eq!(pos.clusters.len() - 1 - bwd_cluster, ry);
            let bwd: Vec<Vec<u32>> = bwd_rev
                .paths()
                .iter()
                .map(|p| p.iter().rev().copied().collect())
                .collect();
            let bwd = Linkage::new(bwd)?;
            let cross = route_subsets_across(pos, rx, &fwd.end_set(), ry, &bwd.start_set())?;
            let out = fwd.concat(&cross)?.concat(&bwd)?;
            Ok(PosRouted::Linkage(out))
        }
        PosQuery::VertexAugmented { i, v } => {
            let k = pos.width().saturating_sub(1);
            let out = augmented_cluster_linkage(pos, *i, k, *v)?;
            Ok(PosRouted::Linkage(out))
        }
        PosQuery::WidthRestrict { a0, b_ell } => {
            Ok(PosRouted::Restricted(width_restrict(pos, a0, b_ell)?))
        }
    }
}

/// The restriction of a path of well-linked sets to prescribed outer
/// terminal sets; clusters are pruned to vertices on terminal paths, making
/// the result strict.
pub fn width_restrict(pos: &PathOfSets, a0: &[u32], b_ell: &[u32]) -> Result<PathOfSets> {
    if pos.flavor != Flavor::WellLinked {
        return Err(Error::FlavorMismatch(
            "width restriction needs a path of well-linked sets".into(),
        ));
    }
    let w = a0.len();
    if w != b_ell.len() || w == 0 || w > pos.width() {
        return Err(Error::InvalidParameter(
            "restricted width must be positive and at most the width".into(),
        ));
    }
    let last = pos.clusters.len() - 1;
    let a_ok = a0.iter().all(|v| pos.clusters[0].a.contains(v));
    let b_ok = b_ell.iter().all(|v| pos.clusters[last].b.contains(v));
    if !a_ok || !b_ok {
        return Err(Error::InvalidParameter(
            "prescribed sets must sit on the outer terminals".into(),
        ));
    }
    let mut clusters = Vec::with_capacity(pos.clusters.len());
    let mut links = Vec::with_capacity(pos.links.len());
    let mut cur_a: Vec<u32> = a0.to_vec();
    for (i, c) in pos.clusters.iter().enumerate() {
        let cur_b: Vec<u32> = if i == last {
            b_ell.to_vec()
        } else {
            // The least B-subset, by terminal order.
            c.b.iter().copied().take(w).collect()
        };
        let d = c.digraph(pos.n);
        let a_set: BTreeSet<u32> = cur_a.iter().copied().collect();
        let b_set: BTreeSet<u32> = cur_b.iter().copied().collect();
        // Prune to vertices on A-B paths.
        let mut keep = BTreeSet::new();
        for &v in &c.sub.vertices {
            if exists_path_through(&d, &a_set, &b_set, v)? {
                keep.insert(v);
            }
        }
        let sub = SubDigraph {
            vertices: keep.clone(),
            arcs: c
                .sub
                .arcs
                .iter()
                .copied()
                .filter(|(u, v)| keep.contains(u) && keep.contains(v))
                .collect(),
        };
        clusters.push(Cluster {
            sub,
            a: cur_a.clone(),
            b: cur_b.clone(),
        });
        if i < last {
            let starts: BTreeSet<u32> = cur_b.iter().copied().collect();
            let link = restrict_link(pos, i, &starts);
            if link.order() != w {
                return Err(Error::Internal("restricted link lost a path".into()));
            }
            cur_a = cur_b.iter().map(|&b| link.map(b).unwrap()).collect();
            links.push(link);
        }
    }
    let out = PathOfSets {
        n: pos.n,
        clusters,
        links,
        flavor: Flavor::WellLinked,
        uniform: false,
        strict: true,
    };
    let check = verify_path_of_sets(&out)?;
    if !check.ok {
        return Err(Error::Internal(format!(
            "restriction fails verification: {:?}",
            check.violated
        )));
    }
    Ok(out)
}

/// Merges runs of `c` consecutive clusters of a uniform path of
/// r-order-linked sets into single clusters of `c * r`-order-linkedness.
pub fn merge_pools(pos: &PathOfSets, c: usize) -> Result<PathOfSets> {
    let Flavor::OrderLinked(r) = pos.flavor else {
        return Err(Error::FlavorMismatch(
            "merging applies to paths of order-linked sets".into(),
        ));
    };
    if !pos.uniform {
        return Err(Error::InvalidParameter(
            "merging needs the uniform flag".into(),
        ));
    }
    if c == 0 || pos.clusters.len() < c {
        return Err(Error::InvalidParameter(format!(
            "cannot merge {} clusters in groups of {c}",
            pos.clusters.len()
        )));
    }
    if c == 1 {
        return Ok(pos.clone());
    }
    let groups = pos.clusters.len() / c;
    let mut clusters = Vec::with_capacity(groups);
    let mut links = Vec::with_capacity(groups.saturating_sub(1));
    for g in 0..groups {
        let lo = g * c;
        let hi = lo + c - 1;
        let mut sub = pos.clusters[lo].sub.clone();
        for t in lo + 1..=hi {
            sub = sub.union(&pos.clusters[t].sub);
        }
        for t in lo..hi {
            let link = &pos.links[t];
            sub = sub.union(&SubDigraph::new(link.vertex_set(), link.arcs()));
        }
        clusters.push(Cluster {
            sub,
            a: pos.clusters[lo].a.clone(),
            b: pos.clusters[hi].b.clone(),
        });
        if g + 1 < groups {
            links.push(pos.links[hi].clone());
        }
    }
    Ok(PathOfSets {
        n: pos.n,
        clusters,
        links,
        flavor: Flavor::OrderLinked(c * r),
        uniform: true,
        strict: false,
    })
}

/// Converts a path of `w`-order-linked sets of width at least `w (ell + 1)`
/// into a path of well-linked sets of width `w` and length `ell` by the
/// smallest-prefix selection; everything stays nested in the original.
pub fn pools_to_pows(pos: &PathOfSets, w: usize, ell: usize) -> Result<PathOfSets> {
    let Flavor::OrderLinked(r) = pos.flavor else {
        return Err(Error::FlavorMismatch(
            "input must be a path of order-linked sets".into(),
        ));
    };
    if r < w {
        return Err(Error::InvalidParameter(format!(
            "order-linkedness degree {r} is below the target width {w}"
        )));
    }
    if pos.width() < w * (ell + 1) {
        return Err(Error::InvalidParameter(format!(
            "width {} is below the required {}",
            pos.width(),
            w * (ell + 1)
        )));
    }
    if pos.length() < ell {
        return Err(Error::InvalidParameter(format!(
            "length {} is below the target {ell}",
            pos.length()
        )));
    }
    let mut clusters: Vec<Cluster> = Vec::with_capacity(ell + 1);
    let mut links: Vec<Linkage> = Vec::with_capacity(ell);
    // Greedy smallest-prefix selection with explicit position tracking: the
    // chosen B-subset always sits at or above every current entry position,
    // so any equal-size subset pair between the chosen sets is a w-shift and
    // the cluster's order-linkedness turns it into well-linkedness.
    let mut cur_a: Vec<u32> = pos.clusters[0].a.iter().copied().take(w).collect();
    for i in 0..=ell {
        let c = &pos.clusters[i];
        let max_a_pos = cur_a
            .iter()
            .map(|v| {
                c.a.iter().position(|x| x == v).ok_or_else(|| {
                    Error::Internal("entry set left the cluster's terminal order".into())
                })
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let cur_b: Vec<u32> =
            c.b.iter()
                .enumerate()
                .filter(|(p, _)| *p >= max_a_pos)
                .map(|(_, v)| *v)
                .take(w)
                .collect();
        if cur_b.len() < w {
            return Err(Error::InvalidParameter(format!(
                "cluster {i} offers only {} exit terminals above position {max_a_pos}",
                cur_b.len()
            )));
        }
        clusters.push(Cluster {
            sub: c.sub.clone(),
            a: cur_a.clone(),
            b: cur_b.clone(),
        });
        if i < ell {
            let starts: BTreeSet<u32> = cur_b.iter().copied().collect();
            let link = restrict_link(pos, i, &starts);
            cur_a = cur_b.iter().map(|&b| link.map(b).unwrap()).collect();
            links.push(link);
        }
    }
    let out = PathOfSets {
        n: pos.n,
        clusters,
        links,
        flavor: Flavor::WellLinked,
        uniform: false,
        strict: false,
    };
    // Nesting is literal: clusters reuse the originals, terminals are
    // subsets, links are sub-linkages.
    for (i, c) in out.clusters.iter().enumerate() {
        debug_assert!(c.a.iter().all(|v| pos.clusters[i].a.contains(v)));
        debug_assert!(c.b.iter().all(|v| pos.clusters[i].b.contains(v)));
    }
    Ok(out)
}

/// Slices a canonical acyclic `(p, q)`-grid into a uniform path of
/// 1-order-linked sets: clusters of `cols_per_cluster >= 2` consecutive
/// columns, terminals on the entering and leaving column of each row.
pub fn slice_grid_to_pools(
    p: usize,
    q: usize,
    cols_per_cluster: usize,
) -> Result<(Digraph, PathOfSets)> {
    if cols_per_cluster < 2 {
        return Err(Error::InvalidParameter(
            "clusters need at least two columns to keep terminals disjoint".into(),
        ));
    }
    if !q.is_multiple_of(cols_per_cluster) {
        return Err(Error::InvalidParameter(format!(
            "{q} columns do not divide into clusters of {cols_per_cluster}"
        )));
    }
    let (d, _) = acyclic_grid(p, q);
    let id = |i: usize, j: usize| (i * q + j) as u32;
    let groups = q / cols_per_cluster;
    let mut clusters = Vec::with_capacity(groups);
    let mut links = Vec::with_capacity(groups - 1);
    for g in 0..groups {
        let c_lo = g * cols_per_cluster;
        let c_hi = c_lo + cols_per_cluster - 1;
        let mut vertices = BTreeSet::new();
        let mut arcs = BTreeSet::new();
        for i in 0..p {
            for j in c_lo..=c_hi {
                vertices.insert(id(i, j));
                if j < c_hi {
                    arcs.insert((id(i, j), id(i, j + 1)));
                }
                if i + 1 < p {
                    arcs.insert((id(i, j), id(i + 1, j)));
                }
            }
        }
        let a: Vec<u32> = (0..p).map(|i| id(i, c_lo)).collect();
        let b: Vec<u32> = (0..p).map(|i| id(i, c_hi)).collect();
        clusters.push(Cluster {
            sub: SubDigraph { vertices, arcs },
            a,
            b,
        });
        if g + 1 < groups {
            let link: Vec<Vec<u32>> = (0..p).map(|i| vec![id(i, c_hi), id(i, c_hi + 1)]).collect();
            links.push(Linkage::new(link)?);
        }
    }
    Ok((
        d,
        PathOfSets {
            n: p * q,
            clusters,
            links,
            flavor: Flavor::OrderLinked(1),
            uniform: true,
            strict: false,
        },
    ))
}

/// Extraction mode for [`path_of_sets_to_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Pools,
    Pows,
}

#[derive(Debug, Clone)]
pub struct GridExtraction {
    pub grid: StructuredPair,
    /// In pows mode: the grid rows start in `A(S_0)` and end in `B(S_ell)`.
    pub anchored: bool,
}

/// Per-window path-routing extraction for unilateral routing layers.
fn window_pk(window: &crate::temporal::TemporalDigraph, k: usize) -> Result<HRouting> {
    let need = ((k * k).div_ceil(2)).min(window.n());
    let s: BTreeSet<u32> = (0..need as u32).collect();
    let walk = covering_walk_unilateral(window, &s)?;
    pk_routing_from_walk(&walk, window.n(), k)
}

/// Witness temporal paths per routing step, in absolute time.
fn step_witnesses(
    rtd: &RoutingTemporalDigraph,
    layers: &[usize],
    routing: &HRouting,
) -> Result<Vec<TemporalWalk>> {
    // Check the routing on the selected layers, then map the step witnesses
    // back to absolute timesteps.
    let sub = rtd.tdg.select_layers(layers);
    let check = check_h_routing(Host::Temporal(&sub), routing)?;
    if !check.ok {
        return Err(Error::NotFound(
            "window stopped carrying the routing".into(),
        ));
    }
    let k = routing.pattern.size();
    let mut out = Vec::with_capacity(k - 1);
    for j in 0..k - 1 {
        let w = check
            .witnesses
            .iter()
            .find(|(a, b, _)| *a == j && *b == j + 1)
            .ok_or_else(|| Error::Internal("missing step witness".into()))?;
        let Witness::Temporal(walk) = &w.2 else {
            return Err(Error::Internal(
                "temporal host returned a static witness".into(),
            ));
        };
        let steps: Vec<(u32, u32)> = walk
            .steps
            .iter()
            .map(|&(v, t)| {
                let abs = if (t as usize) <= layers.len() {
                    layers[t as usize - 1] as u32
                } else {
                    // Arrival marker past the window: clamp to the next
                    // absolute step after the last used layer.
                    layers[layers.len() - 1] as u32 + 1
                };
                (v, abs)
            })
            .collect();
        out.push(TemporalWalk { steps });
    }
    Ok(out)
}

/// Extracts an acyclic `(k, k)`-grid from a path of linked sets: the cross
/// linkage becomes the rows, and equal path routings over cluster windows
/// weave the columns. Opportunistic below the stated dimension bounds.
pub fn path_of_sets_to_grid(pos: &PathOfSets, mode: GridMode, k: usize) -> Result<GridExtraction> {
    match (mode, pos.flavor) {
        (GridMode::Pools, Flavor::OrderLinked(_)) | (GridMode::Pows, Flavor::WellLinked) => {}
        _ => {
            return Err(Error::FlavorMismatch(
                "extraction mode does not match the flavor".into(),
            ))
        }
    }
    if k < 2 {
        return Err(Error::InvalidParameter(
            "grid order must be at least 2".into(),
        ));
    }
    let last = pos.clusters.len() - 1;
    let cross = match pos_linkage(
        pos,
        &PosQuery::TerminalToTerminal {
            i: 0,
            side_i: Side::A,
            j: last,
            side_j: Side::B,
        },
    )? {
        PosRouted::Linkage(l) => l,
        PosRouted::Restricted(_) => unreachable!(),
    };
    let blocks: Vec<SubDigraph> = pos.clusters.iter().map(|c| c.sub.clone()).collect();
    let rtd = build_rtd(&cross, &blocks)?;
    let host = pos.to_digraph();
    let lifetime = rtd.tdg.lifetime();
    let needed_windows = k * (k - 1);

    // Collect per-window signatures.
    let mut selected: Option<(Vec<u32>, Vec<Vec<usize>>)> = None;
    match mode {
        GridMode::Pools => {
            let mut window_len = k.max(2);
            'size: while window_len <= lifetime {
                let count = lifetime / window_len;
                let mut groups: BTreeMap<Vec<u32>, Vec<Vec<usize>>> = BTreeMap::new();
                for wdx in 0..count {
                    let lo = wdx * window_len + 1;
                    let hi = ((wdx + 1) * window_len).min(lifetime);
                    let layers: Vec<usize> = (lo..=hi).collect();
                    let window = rtd.tdg.select_layers(&layers);
                    let Ok(routing) = window_pk(&window, k) else {
                        continue;
                    };
                    let entry = groups.entry(routing.map.clone()).or_default();
                    entry.push(layers);
                    if entry.len() >= needed_windows {
                        selected = Some((routing.map.clone(), entry.clone()));
                        break 'size;
                    }
                }
                window_len += 1;
            }
        }
        GridMode::Pows => {
            // Per-layer dichotomy; path signatures use single layers, clique
            // signatures need runs of n layers for the lifting.
            let mut path_sig: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
            let mut clique_sig: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
            let n = rtd.tdg.n();
            for tau in 1..=lifetime {
                let layer = rtd.tdg.layer(tau);
                if !layer.is_strongly_connected() {
                    return Err(Error::InvalidInput(format!(
                        "routing layer {tau} is not strongly connected"
                    )));
                }
                match path_or_clique_routing(&layer, k, k) {
                    Ok(PathOrClique::Path(p)) => {
                        path_sig.entry(p.0[..k].to_vec()).or_default().push(tau);
                    }
                    Ok(PathOrClique::CliqueRouting(r)) => {
                        let mut m = r.map.clone();
                        m.sort_unstable();
                        clique_sig.entry(m).or_default().push(tau);
                    }
                    Err(_) => {}
                }
            }
            for (sig, taus) in &path_sig {
                // The final layer cannot host an arc's arrival marker.
                let usable: Vec<usize> = taus.iter().copied().filter(|&t| t < lifetime).collect();
                if usable.len() >= needed_windows {
                    let windows: Vec<Vec<usize>> = usable
                        .iter()
                        .take(needed_windows)
                        .map(|&t| vec![t])
                        .collect();
                    selected = Some((sig.clone(), windows));
                    break;
                }
            }
            if selected.is_none() {
                for (sig, taus) in &clique_sig {
                    if taus.len() >= needed_windows * n.max(1) {
                        let windows: Vec<Vec<usize>> = (0..needed_windows)
                            .map(|i| taus[i * n..(i + 1) * n].to_vec())
                            .collect();
                        selected = Some((sig.clone(), windows));
                        break;
                    }
                }
            }
        }
    }
    let Some((map, windows)) = selected else {
        return Err(Error::NotFound(format!(
            "no {needed_windows} windows with an equal routing over {} layers",
            lifetime
        )));
    };

    // Thread the columns.
    let rows: Vec<Vec<u32>> = map
        .iter()
        .map(|&i| rtd.linkage.path(i as usize).to_vec())
        .collect();
    let mut cols = Vec::with_capacity(k);
    for i in 0..k {
        let mut col_walk: Option<TemporalWalk> = None;
        for j in 0..k - 1 {
            let layers = &windows[i * (k - 1) + j];
            let routing = match mode {
                GridMode::Pools => HRouting::new(Pattern::Path(k), map.clone())?,
                GridMode::Pows => {
                    // Path signatures carry single-arc steps; cliques lift.
                    if layers.len() == 1 {
                        HRouting::new(Pattern::Path(k), map.clone())?
                    } else {
                        HRouting::new(Pattern::BidirectedClique(k), map.clone())?
                    }
                }
            };
            let step = if layers.len() == 1 {
                // A path-signature window: the layer holds the arc directly
                // and the arrival marker spills into the next timestep.
                let tau = layers[0] as u32;
                if !rtd
                    .tdg
                    .layer_arcs(layers[0])
                    .contains(&(map[j], map[j + 1]))
                {
                    return Err(Error::NotFound(
                        "window stopped carrying the routing".into(),
                    ));
                }
                TemporalWalk {
                    steps: vec![(map[j], tau), (map[j + 1], tau + 1)],
                }
            } else {
                let steps = step_witnesses(&rtd, layers, &routing)?;
                steps
                    .into_iter()
                    .nth(j)
                    .ok_or_else(|| Error::Internal("missing step".into()))?
            };
            col_walk = Some(match col_walk {
                None => step,
                Some(w) => w.concat(&step)?,
            });
        }
        let walk = col_walk.ok_or_else(|| Error::Internal("empty column".into()))?;
        cols.push(rtd.realize(&walk)?);
    }
    let grid = StructuredPair {
        kind: StructureKind::AcyclicGrid,
        p: Linkage::new(rows)?,
        q: Linkage::new(cols)?,
        meta: StructureMeta::default(),
    };
    let check = crate::gridweb::verify_structure(&host, &grid);
    if !check.ok {
        return Err(Error::Internal(format!(
            "woven grid fails verification: {:?}",
            check.violated
        )));
    }
    let anchored = mode == GridMode::Pows && {
        let a0: BTreeSet<u32> = pos.clusters[0].a.iter().copied().collect();
        let bl: BTreeSet<u32> = pos.clusters[last].b.iter().copied().collect();
        grid.p.starts().iter().all(|s| a0.contains(s))
            && grid.p.ends().iter().all(|e| bl.contains(e))
    };
    Ok(GridExtraction { grid, anchored })
}

// ---------------------------------------------------------------------------
// Webs to paths of sets.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WebWant {
    Pools,
    Pows,
    AnchoredPows,
}

/// Extras reported by the web conversions.
#[derive(Debug, Clone)]
pub struct WebExtras {
    /// Forward linkage decomposition along the horizontals.
    pub forward_prefix: Linkage,
    pub forward_middle: Linkage,
    pub forward_suffix: Linkage,
    /// Side linkage: one vertical per cluster with the entry property.
    pub side: Option<(Linkage, Vec<usize>)>,
}

struct WindowPlan {
    /// Selected window vertical-ranges (0-based, inclusive).
    ranges: Vec<(usize, usize)>,
    /// Routed horizontal indices, in routing order.
    routed: Vec<u32>,
}

fn position_on_path(path: &[u32], v: u32) -> usize {
    path.iter().position(|&x| x == v).expect("vertex on path")
}

fn first_on(path: &[u32], vertical: &BTreeSet<u32>) -> Option<usize> {
    path.iter().position(|v| vertical.contains(v))
}

fn last_on(path: &[u32], vertical: &BTreeSet<u32>) -> Option<usize> {
    path.iter().rposition(|v| vertical.contains(v))
}

/// Builds clusters and links from a window plan over an ordered web; the
/// cluster at window `t` holds the window's verticals and every horizontal's
/// stretch bounded by its first and last contact with them.
fn clusters_from_windows(
    host_n: usize,
    h: &Linkage,
    v: &Linkage,
    plan: &WindowPlan,
) -> Result<PathOfSets> {
    let vertical_sets: Vec<BTreeSet<u32>> = v
        .paths()
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    let mut clusters = Vec::with_capacity(plan.ranges.len());
    let mut links: Vec<Linkage> = Vec::with_capacity(plan.ranges.len().saturating_sub(1));
    let mut prev_b: Option<Vec<u32>> = None;
    for &(lo, hi) in &plan.ranges {
        let mut vertices = BTreeSet::new();
        let mut arcs = BTreeSet::new();
        for vi in lo..=hi {
            let p = v.path(vi);
            vertices.extend(p.iter().copied());
            arcs.extend(p.windows(2).map(|w| (w[0], w[1])));
        }
        let first_set = &vertical_sets[lo];
        let last_set = &vertical_sets[hi];
        let mut a = Vec::with_capacity(plan.routed.len());
        let mut b = Vec::with_capacity(plan.routed.len());
        for hp in h.paths() {
            let f = first_on(hp, first_set)
                .ok_or_else(|| Error::Internal("horizontal misses a window vertical".into()))?;
            let l = last_on(hp, last_set)
                .ok_or_else(|| Error::Internal("horizontal misses a window vertical".into()))?;
            vertices.extend(hp[f..=l].iter().copied());
            arcs.extend(hp[f..=l].windows(2).map(|w| (w[0], w[1])));
        }
        for &ri in &plan.routed {
            let hp = h.path(ri as usize);
            a.push(hp[first_on(hp, first_set).unwrap()]);
            b.push(hp[last_on(hp, last_set).unwrap()]);
        }
        if let Some(pb) = prev_b.take() {
            // Links ride the routed horizontals between windows.
            let mut link_paths = Vec::with_capacity(pb.len());
            for (t, &ri) in plan.routed.iter().enumerate() {
                let hp = h.path(ri as usize);
                let from = position_on_path(hp, pb[t]);
                let to = position_on_path(hp, a[t]);
                if from >= to {
                    return Err(Error::Internal("window link would run backwards".into()));
                }
                link_paths.push(hp[from..=to].to_vec());
            }
            links.push(Linkage::new(link_paths)?);
        }
        prev_b = Some(b.clone());
        clusters.push(Cluster {
            sub: SubDigraph { vertices, arcs },
            a,
            b,
        });
    }
    Ok(PathOfSets {
        n: host_n,
        clusters,
        links,
        flavor: Flavor::OrderLinked(1),
        uniform: true,
        strict: false,
    })
}

fn forward_linkage(
    h: &Linkage,
    plan: &WindowPlan,
    pos: &PathOfSets,
) -> Result<(Linkage, Linkage, Linkage)> {
    let first = &pos.clusters[0];
    let last = &pos.clusters[pos.clusters.len() - 1];
    let mut pre = Vec::new();
    let mut mid = Vec::new();
    let mut suf = Vec::new();
    for (t, &ri) in plan.routed.iter().enumerate() {
        let hp = h.path(ri as usize);
        let a_pos = position_on_path(hp, first.a[t]);
        let b_pos = position_on_path(hp, last.b[t]);
        pre.push(hp[..=a_pos].to_vec());
        mid.push(hp[a_pos..=b_pos].to_vec());
        suf.push(hp[b_pos..].to_vec());
    }
    Ok((Linkage::new(pre)?, Linkage::new(mid)?, Linkage::new(suf)?))
}

/// Converts an ordered or folded ordered web into a path of linked sets.
/// Ordered webs yield uniform paths of w-order-linked sets (after merging)
/// or, past the width conversion, paths of well-linked sets; folded ordered
/// webs use strongly connected routing layers and deliver well-linked
/// clusters directly. The anchored variant extends the outer clusters along
/// the horizontals so the outer terminals sit on `Start(H)` and `End(H)`.
pub fn web_to_path_of_sets(
    host: &Digraph,
    pair: &StructuredPair,
    w: usize,
    ell: usize,
    want: WebWant,
) -> Result<(PathOfSets, WebExtras)> {
    let check = crate::gridweb::verify_structure(host, pair);
    if !check.ok {
        return Err(Error::InvalidInput(format!(
            "web fails verification: {:?}",
            check.violated
        )));
    }
    match pair.kind {
        StructureKind::OrderedWeb | StructureKind::OrderedSegmentation => match want {
            WebWant::Pools => ordered_web_to_pools(host, pair, w, ell),
            WebWant::Pows | WebWant::AnchoredPows => {
                let (pools, extras) = ordered_web_to_pools(host, pair, w * (ell + 1), ell)?;
                let pows = pools_to_pows(&pools, w, ell)?;
                finish_pows(host, pows, extras, want)
            }
        },
        StructureKind::FoldedOrderedWeb => folded_web_to_pows(host, pair, w, ell, want),
        other => Err(Error::InvalidInput(format!(
            "web conversion does not apply to {}",
            other.name()
        ))),
    }
}

fn ordered_web_to_pools(
    host: &Digraph,
    pair: &StructuredPair,
    w: usize,
    ell: usize,
) -> Result<(PathOfSets, WebExtras)> {
    let h = &pair.p;
    let v = &pair.q;
    if h.order() < w {
        return Err(Error::NotFound(format!(
            "web has {} horizontals, needs {w}; the guarantee wants w^2 - 1",
            h.order()
        )));
    }
    let verticals: Vec<SubDigraph> = v
        .paths()
        .iter()
        .map(|p| SubDigraph::new(p.iter().copied(), p.windows(2).map(|x| (x[0], x[1]))))
        .collect();
    let rtd = build_rtd(h, &verticals)?;
    let lifetime = rtd.tdg.lifetime();
    // Merging groups of w needs w (ell + 1) agreeing windows to keep the
    // target length after the group floor.
    let pre_clusters = w * (ell + 1);
    let mut window_len = (w + 1).min(lifetime.max(1));
    let mut chosen: Option<WindowPlan> = None;
    'outer: while window_len <= lifetime {
        let count = lifetime / window_len;
        if count < pre_clusters {
            break;
        }
        let mut groups: BTreeMap<Vec<u32>, Vec<(usize, usize)>> = BTreeMap::new();
        for wdx in 0..count {
            let lo = wdx * window_len;
            let hi = lo + window_len - 1;
            let layers: Vec<usize> = (lo + 1..=hi + 1).collect();
            let window = rtd.tdg.select_layers(&layers);
            let Ok(routing) = window_pk(&window, w) else {
                continue;
            };
            let entry = groups.entry(routing.map.clone()).or_default();
            entry.push((lo, hi));
            if entry.len() >= pre_clusters {
                chosen = Some(WindowPlan {
                    ranges: entry.clone(),
                    routed: routing.map.clone(),
                });
                break 'outer;
            }
        }
        window_len += 1;
    }
    let Some(plan) = chosen else {
        return Err(Error::NotFound(format!(
            "no {pre_clusters} windows with an equal routing over {} verticals",
            v.order()
        )));
    };
    let pre = clusters_from_windows(host.n(), h, v, &plan)?;
    let merged = if w == 1 {
        pre.clone()
    } else {
        merge_pools(&pre, w)?
    };
    let trimmed = merged.slice(0, ell.min(merged.length()));
    if trimmed.length() < ell {
        return Err(Error::NotFound(format!(
            "only length {} extracted, target {ell}",
            trimmed.length()
        )));
    }
    let (fp, fm, fs) = forward_linkage(h, &plan, &trimmed)?;
    // Side linkage: the first vertical of the first window of each merged
    // group carries the cluster's entry set.
    let side_ranges: Vec<usize> = (0..=trimmed.length())
        .map(|g| plan.ranges[g * w].0)
        .collect();
    let side_paths: Vec<Vec<u32>> = side_ranges.iter().map(|&vi| v.path(vi).to_vec()).collect();
    let side = Linkage::new(side_paths)?;
    let extras = WebExtras {
        forward_prefix: fp,
        forward_middle: fm,
        forward_suffix: fs,
        side: Some((side, side_ranges)),
    };
    Ok((trimmed, extras))
}

/// Applies the anchoring extension and re-verifies the conversion output.
fn finish_pows(
    host: &Digraph,
    mut pows: PathOfSets,
    extras: WebExtras,
    want: WebWant,
) -> Result<(PathOfSets, WebExtras)> {
    if want == WebWant::AnchoredPows {
        let last = pows.clusters.len() - 1;
        // Restrict the forward prefix to surviving entry terminals and fold
        // it into the first cluster; symmetrically for the suffix.
        let a0: BTreeSet<u32> = pows.clusters[0].a.iter().copied().collect();
        let pre: Vec<Vec<u32>> = extras
            .forward_prefix
            .paths()
            .iter()
            .filter(|p| a0.contains(p.last().unwrap()))
            .cloned()
            .collect();
        if pre.len() != a0.len() {
            return Err(Error::Internal("prefix lost a surviving terminal".into()));
        }
        let pre = Linkage::new(pre)?;
        let mut sub = pows.clusters[0].sub.clone();
        sub = sub.union(&SubDigraph::new(pre.vertex_set(), pre.arcs()));
        pows.clusters[0] = Cluster {
            sub,
            a: pre.starts(),
            b: pows.clusters[0].b.clone(),
        };

        let bl: BTreeSet<u32> = pows.clusters[last].b.iter().copied().collect();
        let suf: Vec<Vec<u32>> = extras
            .forward_suffix
            .paths()
            .iter()
            .filter(|p| bl.contains(&p[0]))
            .cloned()
            .collect();
        if suf.len() != bl.len() {
            return Err(Error::Internal("suffix lost a surviving terminal".into()));
        }
        let suf = Linkage::new(suf)?;
        let mut sub = pows.clusters[last].sub.clone();
        sub = sub.union(&SubDigraph::new(suf.vertex_set(), suf.arcs()));
        pows.clusters[last] = Cluster {
            sub,
            a: pows.clusters[last].a.clone(),
            b: suf.ends(),
        };
    }
    let check = verify_path_of_sets(&pows)?;
    if !check.ok {
        return Err(Error::Internal(format!(
            "converted path of sets fails verification: {:?}",
            check.violated
        )));
    }
    let _ = host;
    Ok((pows, extras))
}

fn folded_web_to_pows(
    host: &Digraph,
    pair: &StructuredPair,
    w: usize,
    ell: usize,
    want: WebWant,
) -> Result<(PathOfSets, WebExtras)> {
    let h = &pair.p;
    let v = &pair.q;
    let verticals: Vec<SubDigraph> = v
        .paths()
        .iter()
        .map(|p| SubDigraph::new(p.iter().copied(), p.windows(2).map(|x| (x[0], x[1]))))
        .collect();
    let lifetime = verticals.len();
    // A folded vertical crosses every horizontal twice, so a single-vertical
    // window already separates entry from exit.
    let mut window_len = 1;
    type FoldedChoice = (Vec<usize>, Vec<(usize, usize)>); // (h-indices, ranges)
    let mut chosen: Option<FoldedChoice> = None;
    'outer: while window_len <= lifetime {
        let count = lifetime / window_len;
        if count < ell + 1 {
            break;
        }
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for wdx in 0..count {
            let lo = wdx * window_len;
            let hi = lo + window_len - 1;
            // Window-bounded horizontal subpaths.
            let Ok((hw, _, _)) = window_subpaths(h, &verticals, lo, hi) else {
                continue;
            };
            let window_blocks: Vec<SubDigraph> = verticals[lo..=hi].to_vec();
            let Ok(sub) = well_linked_sublinkage(&hw, &window_blocks, w, host.n()) else {
                continue;
            };
            // Key: which horizontals carry the sublinkage.
            let mut key: Vec<usize> = sub
                .paths()
                .iter()
                .map(|p| {
                    h.paths()
                        .iter()
                        .position(|hp| hp.contains(&p[0]))
                        .expect("sub-path starts on a horizontal")
                })
                .collect();
            key.sort_unstable();
            let entry = groups.entry(key.clone()).or_default();
            entry.push((lo, hi));
            if entry.len() > ell {
                chosen = Some((key, entry.clone()));
                break 'outer;
            }
        }
        window_len += 1;
    }
    let Some((indices, ranges)) = chosen else {
        return Err(Error::NotFound(format!(
            "no {} windows agreeing on a well-linked sublinkage",
            ell + 1
        )));
    };
    let plan = WindowPlan {
        ranges,
        routed: indices.iter().map(|&i| i as u32).collect(),
    };
    let mut pos = clusters_from_windows(host.n(), h, v, &plan)?;
    pos.flavor = Flavor::WellLinked;
    pos.uniform = false;
    let trimmed = pos.slice(0, ell.min(pos.length()));
    if trimmed.length() < ell {
        return Err(Error::NotFound(format!(
            "only length {} extracted, target {ell}",
            trimmed.length()
        )));
    }
    let (fp, fm, fs) = forward_linkage(h, &plan, &trimmed)?;
    let extras = WebExtras {
        forward_prefix: fp,
        forward_middle: fm,
        forward_suffix: fs,
        side: None,
    };
    finish_pows(host, trimmed, extras, want)
}

/// Window-bounded subpaths of the horizontals: each runs from its first
/// vertex on the window's first vertical to its last on the window's last.
fn window_subpaths(
    h: &Linkage,
    verticals: &[SubDigraph],
    lo: usize,
    hi: usize,
) -> Result<(Linkage, Vec<usize>, Vec<usize>)> {
    let first: BTreeSet<u32> = verticals[lo].vertices.iter().copied().collect();
    let last: BTreeSet<u32> = verticals[hi].vertices.iter().copied().collect();
    let mut paths = Vec::with_capacity(h.order());
    let mut froms = Vec::new();
    let mut tos = Vec::new();
    for hp in h.paths() {
        let f = first_on(hp, &first)
            .ok_or_else(|| Error::NotFound("horizontal misses the window".into()))?;
        let l = last_on(hp, &last)
            .ok_or_else(|| Error::NotFound("horizontal misses the window".into()))?;
        if f > l {
            return Err(Error::NotFound(
                "window bounds invert on a horizontal".into(),
            ));
        }
        paths.push(hp[f..=l].to_vec());
        froms.push(f);
        tos.push(l);
    }
    Ok((Linkage::new(paths)?, froms, tos))
}

// ---------------------------------------------------------------------------
// Witness-driven assembly.

/// Witness inputs for the final assembly.
#[derive(Debug, Clone)]
pub enum PowsWitness {
    CylindricalGrid(StructuredPair),
    Split(StructuredPair),
    Segmentation(StructuredPair),
}

#[derive(Debug, Clone)]
pub struct PowsWithCertificate {
    pub pows: PathOfSets,
    /// `B(S_ell)` is well-linked to `A(S_0)` in the ambient digraph.
    pub certificate_checked: bool,
}

/// Builds a path of well-linked sets with a checked back-certificate from a
/// cylindrical grid, a well-linked split, or a well-linked segmentation.
pub fn pows_from_witness(
    host: &Digraph,
    witness: &PowsWitness,
    w: usize,
    ell: usize,
) -> Result<PowsWithCertificate> {
    let pows = match witness {
        PowsWitness::CylindricalGrid(pair) => grid_case(host, pair, w, ell)?,
        PowsWitness::Split(pair) => {
            if !pair.meta.well_linked {
                return Err(Error::InvalidInput(
                    "split carries no well-linkedness flag".into(),
                ));
            }
            let folded = crate::gridweb::split_to_folded_web(host, pair)?;
            let (pows, _) = web_to_path_of_sets(host, &folded, w, ell, WebWant::AnchoredPows)?;
            pows
        }
        PowsWitness::Segmentation(pair) => {
            if !pair.meta.well_linked {
                return Err(Error::InvalidInput(
                    "segmentation carries no well-linkedness flag".into(),
                ));
            }
            let ordered = if pair.kind == StructureKind::OrderedSegmentation {
                pair.clone()
            } else {
                crate::gridweb::extract_ordered_segmentation(host, pair, pair.p.order())?
            };
            let (pows, _) = web_to_path_of_sets(host, &ordered, w, ell, WebWant::AnchoredPows)?;
            pows
        }
    };
    let last = pows.clusters.len() - 1;
    let b_set: BTreeSet<u32> = pows.clusters[last].b.iter().copied().collect();
    let a_set: BTreeSet<u32> = pows.clusters[0].a.iter().copied().collect();
    let report = check_well_linked(host, &b_set, &a_set, WELL_LINKED_CAP)?;
    if !report.well_linked {
        return Err(Error::NotFound(
            "assembled path of sets lacks the back well-linkedness certificate".into(),
        ));
    }
    Ok(PowsWithCertificate {
        pows,
        certificate_checked: true,
    })
}

/// Ring-sector slicing of a cylindrical grid: `ell + 2` sectors of `w`
/// column pairs; the spare sector is dropped and the closing linkage is
/// folded into the first cluster, leaving its terminals well-linked through
/// the dropped sector.
fn grid_case(host: &Digraph, pair: &StructuredPair, w: usize, ell: usize) -> Result<PathOfSets> {
    let check = crate::gridweb::verify_structure(host, pair);
    if !check.ok {
        return Err(Error::InvalidInput(format!(
            "cylindrical grid fails verification: {:?}",
            check.violated
        )));
    }
    let m = pair.q.order(); // rows / cycles
    let cols = pair.p.order(); // 2m columns
    let sector_cols = 2 * w;
    let sectors = ell + 2;
    if sectors * sector_cols > cols || w > m {
        return Err(Error::NotFound(format!(
            "grid of order {m} cannot host {sectors} sectors of {sector_cols} columns at width {w}"
        )));
    }
    let rows: Vec<&Vec<u32>> = pair.q.paths().iter().collect();
    let col_sets: Vec<BTreeSet<u32>> = pair
        .p
        .paths()
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    let mut clusters: Vec<Cluster> = Vec::with_capacity(sectors);
    let mut links: Vec<Linkage> = Vec::with_capacity(sectors - 1);
    let mut prev_exits: Option<Vec<u32>> = None;
    for s in 0..sectors {
        let c_lo = s * sector_cols;
        let c_hi = c_lo + sector_cols - 1;
        let mut vertices = BTreeSet::new();
        let mut arcs = BTreeSet::new();
        for ci in c_lo..=c_hi {
            let p = pair.p.path(ci);
            vertices.extend(p.iter().copied());
            arcs.extend(p.windows(2).map(|x| (x[0], x[1])));
        }
        let mut a = Vec::with_capacity(w);
        let mut b = Vec::with_capacity(w);
        for row in rows.iter() {
            let f = first_on(row, &col_sets[c_lo]).expect("rows cross every column");
            let l = last_on(row, &col_sets[c_hi]).expect("rows cross every column");
            vertices.extend(row[f..=l].iter().copied());
            arcs.extend(row[f..=l].windows(2).map(|x| (x[0], x[1])));
        }
        for row in rows.iter().take(w) {
            let f = first_on(row, &col_sets[c_lo]).unwrap();
            let l = last_on(row, &col_sets[c_hi]).unwrap();
            a.push(row[f]);
            b.push(row[l]);
        }
        if let Some(pb) = prev_exits.take() {
            let mut link_paths = Vec::with_capacity(w);
            for (t, row) in rows.iter().take(w).enumerate() {
                let from = position_on_path(row, pb[t]);
                let to = position_on_path(row, a[t]);
                link_paths.push(row[from..=to].to_vec());
            }
            links.push(Linkage::new(link_paths)?);
        }
        prev_exits = Some(b.clone());
        clusters.push(Cluster {
            sub: SubDigraph { vertices, arcs },
            a,
            b,
        });
    }
    // Closing linkage: ride each row to its end and take the closing arc
    // back to the row start, which is the first sector's entry when the
    // first sector starts at column 0.
    let dropped = clusters.pop().expect("at least the spare sector");
    let last_link = links.pop().expect("link into the spare sector");
    let mut closing_paths = Vec::with_capacity(w);
    for (t, row) in rows.iter().take(w).enumerate() {
        let from = position_on_path(row, dropped.b[t]);
        let mut p: Vec<u32> = row[from..].to_vec();
        let (u, vv) =
            pair.meta.closing_arcs[pair.q.paths().iter().position(|r| r == *row).unwrap()];
        debug_assert_eq!(*p.last().unwrap(), u);
        p.push(vv);
        // Continue to the first sector entry (the row start).
        let entry = clusters[0].a[t];
        let entry_pos = position_on_path(row, entry);
        p.extend(row[1..=entry_pos].iter().copied());
        closing_paths.push(p);
    }
    let closing = Linkage::new(closing_paths)?;
    // Wrap: the first cluster absorbs the closing linkage, the last cluster
    // absorbs its outgoing link.
    let mut first = clusters[0].clone();
    let closing_sub = SubDigraph::new(closing.vertex_set(), closing.arcs());
    first.sub = first.sub.union(&closing_sub);
    first.a = closing.starts();
    clusters[0] = first;
    let lastc = clusters.len() - 1;
    let link_sub = SubDigraph::new(last_link.vertex_set(), last_link.arcs());
    let mut tail = clusters[lastc].clone();
    tail.sub = tail.sub.union(&link_sub);
    tail.b = last_link.ends();
    clusters[lastc] = tail;
    let pos = PathOfSets {
        n: host.n(),
        clusters,
        links,
        flavor: Flavor::WellLinked,
        uniform: false,
        strict: false,
    };
    let check = verify_path_of_sets(&pos)?;
    if !check.ok {
        return Err(Error::Internal(format!(
            "ring slicing fails verification: {:?}",
            check.violated
        )));
    }
    Ok(pos)
}
