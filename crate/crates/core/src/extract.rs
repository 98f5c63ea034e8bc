//! Constructive routing extraction: path routings from walks and unilateral
//! temporal digraphs, the path/bidirected-path dichotomy on walks, cycle or
//! bidirected-path routings under strongly connected layers, the long-path
//! or clique-routing dichotomy in strong digraphs, and the well-linked
//! sublinkage construction, plus the balanced-split and nonnegative-cycle
//! subroutines they lean on.

use std::collections::{BTreeMap, BTreeSet};

use crate::digraph::{condensation, Digraph, SubDigraph, Walk};
use crate::error::{Error, Result};
use crate::linkage::{check_well_linked, Linkage, WELL_LINKED_CAP};
use crate::temporal::{
    build_rtd, check_h_routing, covering_walk_strong, covering_walk_unilateral, HRouting, Host,
    Pattern, TemporalDigraph, TemporalWalk,
};

/// Verifies a routing against a host and wraps failure as `Internal`; every
/// extraction returns only verified routings.
fn verified(host: Host, routing: HRouting) -> Result<HRouting> {
    let check = check_h_routing(host, &routing)?;
    if check.ok {
        Ok(routing)
    } else {
        Err(Error::Internal(format!(
            "constructed routing failed verification at pattern path {:?}",
            check.failing
        )))
    }
}

/// Minimal covering subwalk: loops are excised (with retiming) while every
/// vertex of `keep` still occurs; at the fixpoint every remaining return
/// carries a vertex of `keep` occurring only inside it.
fn minimal_covering_subwalk(walk: &TemporalWalk, keep: &BTreeSet<u32>) -> TemporalWalk {
    let positions: Vec<u32> = walk.steps.iter().map(|s| s.0).collect();
    let covered = |lo: usize, hi: usize| keep.iter().all(|v| positions[lo..=hi].contains(v));
    let mut lo = 0;
    let mut hi = walk.steps.len() - 1;
    if !covered(lo, hi) {
        return walk.clone();
    }
    while lo < hi && covered(lo + 1, hi) {
        lo += 1;
    }
    while hi > lo && covered(lo, hi - 1) {
        hi -= 1;
    }
    let mut cur = walk.slice(lo, hi);
    'outer: loop {
        let len = cur.steps.len();
        for i in 0..len {
            for j in (i + 1)..len {
                if cur.steps[i].0 != cur.steps[j].0 {
                    continue;
                }
                let mut steps = Vec::with_capacity(len - (j - i));
                steps.extend_from_slice(&cur.steps[..i]);
                steps.push((cur.steps[i].0, cur.steps[j].1));
                steps.extend_from_slice(&cur.steps[j + 1..]);
                let vs: BTreeSet<u32> = steps.iter().map(|s| s.0).collect();
                if keep.iter().all(|v| vs.contains(v)) {
                    cur = TemporalWalk { steps };
                    continue 'outer;
                }
            }
        }
        break;
    }
    cur
}

/// Extract from `segment` a temporal path containing all of `must_keep`, by
/// excising only loops that avoid them. Fails when overlapping loops force a
/// kept vertex out.
fn segment_to_path_keeping(
    segment: &TemporalWalk,
    must_keep: &BTreeSet<u32>,
) -> Option<TemporalWalk> {
    let mut cur = segment.clone();
    'outer: loop {
        let len = cur.steps.len();
        let verts: Vec<u32> = cur.steps.iter().map(|s| s.0).collect();
        let mut repeated = false;
        for i in 0..len {
            for j in (i + 1)..len {
                if verts[i] != verts[j] {
                    continue;
                }
                repeated = true;
                let dropped: BTreeSet<u32> = verts[i + 1..=j].iter().copied().collect();
                let remaining: BTreeSet<u32> = verts[..=i]
                    .iter()
                    .chain(verts[j + 1..].iter())
                    .copied()
                    .collect();
                if must_keep
                    .iter()
                    .all(|v| !dropped.contains(v) || remaining.contains(v))
                {
                    let mut steps = Vec::with_capacity(len - (j - i));
                    steps.extend_from_slice(&cur.steps[..i]);
                    steps.push((cur.steps[i].0, cur.steps[j].1));
                    steps.extend_from_slice(&cur.steps[j + 1..]);
                    cur = TemporalWalk { steps };
                    continue 'outer;
                }
            }
        }
        if repeated {
            return None;
        }
        return Some(cur);
    }
}

fn occurrence_index(walk: &TemporalWalk, v: u32) -> Option<usize> {
    walk.steps.iter().position(|s| s.0 == v)
}

/// P_k-routing extracted from a temporal walk: a temporal subpath on `k`
/// distinct vertices if one exists, otherwise the routing over `k`
/// single-occurrence vertices of the minimal covering subwalk, in occurrence
/// order. The stated guarantee applies when the walk visits at least
/// `ceil(k^2 / 2)` distinct vertices.
pub fn pk_routing_from_walk(walk: &TemporalWalk, n: usize, k: usize) -> Result<HRouting> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "routing target must be positive".into(),
        ));
    }
    let host_tdg = walk.as_temporal_digraph(n, walk.arrives() as usize);
    let verts: Vec<u32> = walk.steps.iter().map(|s| s.0).collect();
    for i in 0..verts.len() {
        let mut seen = BTreeSet::new();
        for (offset, &v) in verts[i..].iter().enumerate() {
            if !seen.insert(v) {
                break;
            }
            if seen.len() == k {
                let map = verts[i..=i + offset].to_vec();
                let routing = HRouting::new(Pattern::Path(k), map)?;
                return verified(Host::Temporal(&host_tdg), routing);
            }
        }
    }
    let all: BTreeSet<u32> = walk.vertices();
    let w1 = minimal_covering_subwalk(walk, &all);
    let mut count: BTreeMap<u32, usize> = BTreeMap::new();
    for s in &w1.steps {
        *count.entry(s.0).or_insert(0) += 1;
    }
    let singles: Vec<u32> = w1
        .steps
        .iter()
        .map(|s| s.0)
        .filter(|v| count[v] == 1)
        .collect();
    if singles.len() < k {
        return Err(Error::NotFound(format!(
            "walk visits {} vertices with {} single occurrences; the guarantee needs {} vertices",
            all.len(),
            singles.len(),
            (k * k).div_ceil(2)
        )));
    }
    let routing = HRouting::new(Pattern::Path(k), singles[..k].to_vec())?;
    verified(Host::Temporal(&host_tdg), routing)
}

/// P_k-routing in a temporal digraph with unilateral layers: a covering walk
/// over an arbitrary `ceil(k^2/2)`-subset composed with the walk extraction.
pub fn pk_routing_unilateral(t: &TemporalDigraph, k: usize) -> Result<(BTreeSet<u32>, HRouting)> {
    let need = (k * k).div_ceil(2);
    if t.n() < need {
        return Err(Error::InvalidParameter(format!(
            "{} vertices are fewer than the required ceil(k^2/2) = {need}",
            t.n()
        )));
    }
    let s: BTreeSet<u32> = (0..need as u32).collect();
    let walk = covering_walk_unilateral(t, &s)?;
    let routing = pk_routing_from_walk(&walk, t.n(), k)?;
    let routing = verified(Host::Temporal(t), routing)?;
    Ok((s, routing))
}

/// Outcome of the choosable routing dichotomy.
#[derive(Debug, Clone)]
pub enum ChoosableOutcome {
    /// A bidirected-path routing.
    BiPath { routing: HRouting },
    /// Decomposition `w_a · w_b · w_c` where `w_a`/`w_c` are internally
    /// disjoint from the routed set and `w_b` hosts the path routing with
    /// its first routed vertex at `Start(w_b)` and last at `End(w_b)`.
    PathAnchored {
        w_a: TemporalWalk,
        w_b: TemporalWalk,
        w_c: TemporalWalk,
        routing: HRouting,
    },
}

impl ChoosableOutcome {
    pub fn routing(&self) -> &HRouting {
        match self {
            ChoosableOutcome::BiPath { routing } => routing,
            ChoosableOutcome::PathAnchored { routing, .. } => routing,
        }
    }
}

struct ChoosableCtx<'a> {
    host: &'a TemporalDigraph,
    k1: usize,
    k2: usize,
}

impl<'a> ChoosableCtx<'a> {
    /// Anchored path case: `w_b` spans the selected occurrences inside
    /// `mid`, `before`/`after` supply the outer walks.
    fn path_case(
        &self,
        before: Option<&TemporalWalk>,
        mid: &TemporalWalk,
        after: Option<&TemporalWalk>,
        sel: &[u32],
    ) -> Option<ChoosableOutcome> {
        let sel_set: BTreeSet<u32> = sel.iter().copied().collect();
        let lo = occurrence_index(mid, *sel.first()?)?;
        let hi = occurrence_index(mid, *sel.last()?)?;
        if lo > hi {
            return None;
        }
        let w_b = segment_to_path_keeping(&mid.slice(lo, hi), &sel_set)?;
        if w_b.start() != *sel.first()? || w_b.end() != *sel.last()? {
            return None;
        }
        let w_a = {
            let prefix = mid.slice(0, lo);
            let joined = match before {
                Some(b) => b.concat(&prefix).ok()?,
                None => prefix,
            };
            joined.loop_erased()
        };
        let w_c = {
            let suffix = mid.slice(hi, mid.steps.len() - 1);
            let joined = match after {
                Some(a) => suffix.concat(a).ok()?,
                None => suffix,
            };
            joined.loop_erased()
        };
        for (idx, s) in w_a.steps.iter().enumerate() {
            if idx + 1 != w_a.steps.len() && sel_set.contains(&s.0) {
                return None;
            }
        }
        for (idx, s) in w_c.steps.iter().enumerate() {
            if idx != 0 && sel_set.contains(&s.0) {
                return None;
            }
        }
        let routing = HRouting::new(Pattern::Path(sel.len()), sel.to_vec()).ok()?;
        let check = check_h_routing(Host::Temporal(self.host), &routing).ok()?;
        if !check.ok {
            return None;
        }
        Some(ChoosableOutcome::PathAnchored {
            w_a,
            w_b,
            w_c,
            routing,
        })
    }

    /// Split-walk base case: `s_hat` occurs exactly once on each of `wa` and
    /// `wc` (with `wc` temporally after `wa`); the two induced orders give a
    /// reversed subsequence (bidirected path) or an agreeing one (anchored
    /// path inside `wa`).
    fn split_claim(
        &self,
        wa: &TemporalWalk,
        wc: &TemporalWalk,
        s_hat: &[u32],
    ) -> Option<ChoosableOutcome> {
        if s_hat.is_empty() {
            return None;
        }
        let mut by_wa: Vec<u32> = s_hat.to_vec();
        by_wa.sort_by_key(|&v| occurrence_index(wa, v));
        if by_wa.iter().any(|&v| occurrence_index(wa, v).is_none()) {
            return None;
        }
        let pos_in_wc: Vec<Option<usize>> =
            by_wa.iter().map(|&v| occurrence_index(wc, v)).collect();
        if pos_in_wc.iter().any(|p| p.is_none()) {
            return None;
        }
        let pos_in_wc: Vec<i64> = pos_in_wc.into_iter().map(|p| p.unwrap() as i64).collect();
        let (kind, witness) =
            crate::digraph::monotone_subsequence(&pos_in_wc, self.k2, self.k1).ok()?;
        let chosen: Vec<u32> = witness
            .iter()
            .map(|&p| by_wa[pos_in_wc.iter().position(|&x| x == p).unwrap()])
            .collect();
        match kind {
            crate::digraph::MonotoneKind::Decreasing => {
                let mut sel = chosen;
                sel.sort_by_key(|&v| occurrence_index(wa, v));
                let routing = HRouting::new(Pattern::BidirectedPath(sel.len()), sel).ok()?;
                let check = check_h_routing(Host::Temporal(self.host), &routing).ok()?;
                check.ok.then_some(ChoosableOutcome::BiPath { routing })
            }
            crate::digraph::MonotoneKind::Increasing => {
                let mut sel = chosen;
                sel.sort_by_key(|&v| occurrence_index(wa, v));
                self.path_case(None, wa, Some(wc), &sel)
            }
        }
    }
}

/// Returns of `walk` over `s`: position pairs `(i, j)` bounding a sub-walk
/// that starts and ends at the same `s`-vertex, which appears exactly twice
/// on it, every other `s`-vertex inside appearing exactly once.
fn returns_of(walk: &TemporalWalk, s: &BTreeSet<u32>) -> Vec<(usize, usize)> {
    let verts: Vec<u32> = walk.steps.iter().map(|st| st.0).collect();
    let mut out = Vec::new();
    for i in 0..verts.len() {
        if !s.contains(&verts[i]) {
            continue;
        }
        for j in (i + 1)..verts.len() {
            if verts[j] != verts[i] {
                continue;
            }
            let inner = &verts[i + 1..j];
            if inner.contains(&verts[i]) {
                break;
            }
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for &v in inner {
                if s.contains(&v) {
                    *counts.entry(v).or_insert(0) += 1;
                }
            }
            if counts.values().all(|&c| c == 1) {
                out.push((i, j));
            }
            break;
        }
    }
    out
}

/// The unique decomposition of a walk into return-free stretches and returns
/// over `s`; yields the return position ranges.
fn returns_decomposition(walk: &TemporalWalk, s: &BTreeSet<u32>) -> Vec<(usize, usize)> {
    let verts: Vec<u32> = walk.steps.iter().map(|st| st.0).collect();
    let mut result = Vec::new();
    let mut segment_start = 0usize;
    let mut last_pos: BTreeMap<u32, usize> = BTreeMap::new();
    for (idx, &v) in verts.iter().enumerate() {
        if s.contains(&v) {
            if let Some(&p) = last_pos.get(&v) {
                if p >= segment_start {
                    result.push((p, idx));
                    segment_start = idx;
                    last_pos.clear();
                }
            }
            last_pos.insert(v, idx);
        }
    }
    result
}

/// `6·k1·k2^2 - 8·k1·k2 + 2·k1 - 2·k2^2 + 3·k2`.
pub fn choosable_s_bound(k1: usize, k2: usize) -> usize {
    let (k1, k2) = (k1 as i64, k2 as i64);
    (6 * k1 * k2 * k2 - 8 * k1 * k2 + 2 * k1 - 2 * k2 * k2 + 3 * k2).max(0) as usize
}

/// Dichotomy on a temporal walk: either a bidirected-path routing of order
/// `k1` over a subset of `s`, or a decomposition `w_a · w_b · w_c` whose
/// middle hosts an endpoint-anchored path routing of order `k2`. Cases are
/// attempted in the order of the return analysis; opportunistic below the
/// size guarantee.
pub fn choosable_routing(
    host: &TemporalDigraph,
    walk: &TemporalWalk,
    s: &BTreeSet<u32>,
    k1: usize,
    k2: usize,
) -> Result<ChoosableOutcome> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidParameter(
            "routing targets must be positive".into(),
        ));
    }
    let s: BTreeSet<u32> = s.intersection(&walk.vertices()).copied().collect();
    let ctx = ChoosableCtx { host, k1, k2 };
    let w1 = minimal_covering_subwalk(walk, &s);
    let verts: Vec<u32> = w1.steps.iter().map(|st| st.0).collect();
    let mut occurrences: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in &verts {
        *occurrences.entry(v).or_insert(0) += 1;
    }
    let single = |v: u32| occurrences.get(&v) == Some(&1);

    let all_returns = returns_of(&w1, &s);
    let best_return = all_returns.iter().copied().max_by_key(|&(i, j)| {
        let inside: BTreeSet<u32> = verts[i..=j]
            .iter()
            .copied()
            .filter(|v| s.contains(v))
            .collect();
        (inside.len(), usize::MAX - i)
    });

    if let Some((ri, rj)) = best_return {
        if let Some(out) = case_rich_return(&ctx, &w1, &s, ri, rj) {
            return Ok(out);
        }
    }

    let decomposition = returns_decomposition(&w1, &s);
    if decomposition.len() >= k2 {
        let mut anchors = Vec::new();
        for &(i, j) in &decomposition {
            if let Some(&u) = verts[i..=j].iter().find(|&&v| s.contains(&v) && single(v)) {
                anchors.push(u);
            }
            if anchors.len() == k2 {
                break;
            }
        }
        if anchors.len() == k2 {
            if let Some(out) = ctx.path_case(None, &w1, None, &anchors) {
                return Ok(out);
            }
        }
    }

    if let Some(out) = case_rich_stretch(&ctx, &w1, &s, &decomposition) {
        return Ok(out);
    }

    // Last resort: any k2 single-occurrence s-vertices in order.
    let mut seen = BTreeSet::new();
    let singles: Vec<u32> = verts
        .iter()
        .copied()
        .filter(|&v| s.contains(&v) && single(v) && seen.insert(v))
        .collect();
    if singles.len() >= k2 {
        if let Some(out) = ctx.path_case(None, &w1, None, &singles[..k2]) {
            return Ok(out);
        }
    }
    // Closing opportunistic attempt: a bidirected-path candidate over the
    // first-occurrence ordering of the original walk, verification-gated.
    let mut seen = BTreeSet::new();
    let first_order: Vec<u32> = walk
        .steps
        .iter()
        .map(|st| st.0)
        .filter(|&v| s.contains(&v) && seen.insert(v))
        .collect();
    if first_order.len() >= k1 {
        let sel = first_order[..k1].to_vec();
        if let Ok(routing) = HRouting::new(Pattern::BidirectedPath(k1), sel) {
            if let Ok(c) = check_h_routing(Host::Temporal(host), &routing) {
                if c.ok {
                    return Ok(ChoosableOutcome::BiPath { routing });
                }
            }
        }
    }
    Err(Error::NotFound(format!(
        "no bidirected-path({k1}) or anchored path({k2}) routing; the guarantee needs |S| >= {}",
        choosable_s_bound(k1, k2)
    )))
}

fn case_rich_return(
    ctx: &ChoosableCtx,
    w1: &TemporalWalk,
    s: &BTreeSet<u32>,
    ri: usize,
    rj: usize,
) -> Option<ChoosableOutcome> {
    let r = w1.slice(ri, rj);
    let q_a = if ri > 0 {
        Some(w1.slice(0, ri).loop_erased())
    } else {
        None
    };
    let q_b = if rj + 1 < w1.steps.len() {
        Some(w1.slice(rj, w1.steps.len() - 1).loop_erased())
    } else {
        None
    };
    // Occurrence counts across q_a · r · q_b, sharing junction vertices once.
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut bump = |w: &TemporalWalk, skip_first: bool| {
        for (i, st) in w.steps.iter().enumerate() {
            if skip_first && i == 0 {
                continue;
            }
            *counts.entry(st.0).or_insert(0) += 1;
        }
    };
    if let Some(a) = &q_a {
        bump(a, false);
    }
    bump(&r, q_a.is_some());
    if let Some(b) = &q_b {
        bump(b, true);
    }
    let s1: Vec<u32> = {
        let inside: Vec<u32> = r
            .steps
            .iter()
            .map(|st| st.0)
            .filter(|v| s.contains(v))
            .collect();
        let mut seen = BTreeSet::new();
        inside.into_iter().filter(|&v| seen.insert(v)).collect()
    };
    let s2: Vec<u32> = s1
        .iter()
        .copied()
        .filter(|v| counts.get(v) == Some(&1))
        .collect();

    if s2.len() >= ctx.k2 {
        let mut sel: Vec<u32> = s2[..ctx.k2].to_vec();
        sel.sort_by_key(|&v| occurrence_index(&r, v));
        if let Some(out) = ctx.path_case(q_a.as_ref(), &r, q_b.as_ref(), &sel) {
            return Some(out);
        }
    }
    if let (Some(a), Some(b)) = (&q_a, &q_b) {
        let in_a = a.vertices();
        let in_b = b.vertices();
        let only_a: Vec<u32> = s1
            .iter()
            .copied()
            .filter(|v| in_a.contains(v) && !in_b.contains(v))
            .collect();
        if only_a.len() >= ctx.k2 {
            let mut sel = only_a[..ctx.k2].to_vec();
            sel.sort_by_key(|&v| occurrence_index(a, v));
            if let Some(out) = ctx.path_case(None, a, Some(b), &sel) {
                return Some(out);
            }
        }
        let both: Vec<u32> = s1
            .iter()
            .copied()
            .filter(|v| in_a.contains(v) && in_b.contains(v))
            .collect();
        if !both.is_empty() {
            if let Some(out) = ctx.split_claim(a, b, &both) {
                return Some(out);
            }
        }
    }
    None
}

fn case_rich_stretch(
    ctx: &ChoosableCtx,
    w1: &TemporalWalk,
    s: &BTreeSet<u32>,
    decomposition: &[(usize, usize)],
) -> Option<ChoosableOutcome> {
    let len = w1.steps.len();
    let mut stretches: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for &(i, j) in decomposition {
        if i > start {
            stretches.push((start, i));
        }
        start = j;
    }
    if start < len {
        stretches.push((start, len - 1));
    }
    let verts: Vec<u32> = w1.steps.iter().map(|st| st.0).collect();
    let (qi, qj) = stretches.into_iter().max_by_key(|&(i, j)| {
        let inside: BTreeSet<u32> = verts[i..=j]
            .iter()
            .copied()
            .filter(|v| s.contains(v))
            .collect();
        (inside.len(), usize::MAX - i)
    })?;
    let q_b = w1.slice(qi, qj);
    let q_a = if qi > 0 {
        Some(w1.slice(0, qi).loop_erased())
    } else {
        None
    };
    let q_c = if qj + 1 < len {
        Some(w1.slice(qj, len - 1).loop_erased())
    } else {
        None
    };
    let s_b: Vec<u32> = {
        let inside: Vec<u32> = q_b
            .steps
            .iter()
            .map(|st| st.0)
            .filter(|v| s.contains(v))
            .collect();
        let mut seen = BTreeSet::new();
        inside.into_iter().filter(|&v| seen.insert(v)).collect()
    };
    let s_a: BTreeSet<u32> = q_a.as_ref().map(|w| w.vertices()).unwrap_or_default();
    let s_c: BTreeSet<u32> = q_c.as_ref().map(|w| w.vertices()).unwrap_or_default();

    let private: Vec<u32> = s_b
        .iter()
        .copied()
        .filter(|v| !s_a.contains(v) && !s_c.contains(v))
        .collect();
    if private.len() >= ctx.k2 {
        let sel = private[..ctx.k2].to_vec();
        if let Some(out) = ctx.path_case(q_a.as_ref(), &q_b, q_c.as_ref(), &sel) {
            return Some(out);
        }
    }
    if let Some(a) = &q_a {
        let shared: Vec<u32> = s_b
            .iter()
            .copied()
            .filter(|v| s_a.contains(v) && !s_c.contains(v))
            .collect();
        if !shared.is_empty() {
            let wc = match q_c.as_ref() {
                Some(c) => q_b.concat(c).ok(),
                None => Some(q_b.clone()),
            };
            if let Some(wc) = wc {
                if let Some(out) = ctx.split_claim(a, &wc, &shared) {
                    return Some(out);
                }
            }
        }
    }
    if let (Some(a), Some(c)) = (&q_a, &q_c) {
        let shared_c: Vec<u32> = s_b
            .iter()
            .copied()
            .filter(|v| s_c.contains(v) && !s_a.contains(v))
            .collect();
        if !shared_c.is_empty() {
            if let Ok(wa) = a.concat(&q_b) {
                if let Some(out) = ctx.split_claim(&wa, c, &shared_c) {
                    return Some(out);
                }
            }
        }
        let both: Vec<u32> = s
            .iter()
            .copied()
            .filter(|v| s_a.contains(v) && s_c.contains(v))
            .collect();
        if !both.is_empty() {
            if let Some(out) = ctx.split_claim(a, c, &both) {
                return Some(out);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StrongRoutingKind {
    Cycle,
    BidirectedPath,
}

#[derive(Debug, Clone)]
pub struct StrongRoutingOutcome {
    pub kind: StrongRoutingKind,
    pub subset: Vec<u32>,
    pub routing: HRouting,
}

/// Cycle or bidirected-path routing of order `k` over a subset of `s` in a
/// temporal digraph whose layers are all strongly connected: two covering
/// phases, the choosable dichotomy on each, and an order-agreement analysis
/// between the two path routings. The caller has no control over the kind.
pub fn strong_temporal_routing(
    t: &TemporalDigraph,
    s: &BTreeSet<u32>,
    k: usize,
) -> Result<StrongRoutingOutcome> {
    for tau in 1..=t.lifetime() {
        if !t.layer(tau).is_strongly_connected() {
            return Err(Error::InvalidInput(format!(
                "layer {tau} is not strongly connected"
            )));
        }
    }
    if s.is_empty() {
        return Err(Error::InvalidParameter("S is empty".into()));
    }
    if k == 1 {
        let v = *s.iter().next().unwrap();
        let routing = HRouting::new(Pattern::Cycle(1), vec![v])?;
        let routing = verified(Host::Temporal(t), routing)?;
        return Ok(StrongRoutingOutcome {
            kind: StrongRoutingKind::Cycle,
            subset: vec![v],
            routing,
        });
    }
    let k2 = (k - 1) * (k - 1) + 1;
    let k1 = choosable_s_bound(k, k2);
    let not_found = || {
        Error::NotFound(format!(
            "no cycle or bidirected-path routing of order {k}; guarantee needs |S| >= {} and \
             lifetime >= {}",
            choosable_s_bound(k, k1),
            choosable_s_bound(k, k1) + k1 * (t.n().saturating_sub(1))
        ))
    };

    let mid = (t.lifetime() / 2).max(1);
    let first = t.window(1, mid);
    let v0 = *s.iter().next().unwrap();
    let target = *s.iter().last().unwrap();
    let w1 = covering_walk_strong(&first, s, v0, target).map_err(|_| not_found())?;
    // Path targets degrade to what the set can offer below the guarantee.
    let k1_eff = k1.max(k).min(s.len()).max(k);
    let out1 = choosable_routing(&first, &w1, s, k, k1_eff)?;
    let phi1 = match &out1 {
        ChoosableOutcome::BiPath { routing } => {
            let r = verified(Host::Temporal(t), routing.clone())?;
            let subset = r.map.clone();
            return Ok(StrongRoutingOutcome {
                kind: StrongRoutingKind::BidirectedPath,
                subset,
                routing: r,
            });
        }
        ChoosableOutcome::PathAnchored { routing, .. } => routing.clone(),
    };
    let s1: BTreeSet<u32> = phi1.map.iter().copied().collect();

    let second = t.window(mid + 1, t.lifetime());
    if second.lifetime() == 0 {
        return Err(not_found());
    }
    let v1 = *s1.iter().next().unwrap();
    let t1 = *s1.iter().last().unwrap();
    let w3 = covering_walk_strong(&second, &s1, v1, t1).map_err(|_| not_found())?;
    let k2_eff = k2.max(k).min(s1.len()).max(k);
    let out2 = choosable_routing(&second, &w3, &s1, k, k2_eff)?;
    let phi2 = match &out2 {
        ChoosableOutcome::BiPath { routing } => {
            let r = verified(Host::Temporal(t), routing.clone())?;
            let subset = r.map.clone();
            return Ok(StrongRoutingOutcome {
                kind: StrongRoutingKind::BidirectedPath,
                subset,
                routing: r,
            });
        }
        ChoosableOutcome::PathAnchored { routing, .. } => routing.clone(),
    };

    let common: Vec<u32> = phi1
        .map
        .iter()
        .copied()
        .filter(|v| phi2.map.contains(v))
        .collect();
    if common.len() < k {
        return Err(not_found());
    }
    let pos2: Vec<i64> = common
        .iter()
        .map(|v| phi2.map.iter().position(|x| x == v).unwrap() as i64)
        .collect();
    let (kind, witness) =
        crate::digraph::monotone_subsequence(&pos2, k, k).map_err(|_| not_found())?;
    let chosen: Vec<u32> = witness
        .iter()
        .map(|&p| common[pos2.iter().position(|&x| x == p).unwrap()])
        .collect();
    let pattern = match kind {
        crate::digraph::MonotoneKind::Increasing => Pattern::Cycle(k),
        crate::digraph::MonotoneKind::Decreasing => Pattern::BidirectedPath(k),
    };
    let routing = HRouting::new(pattern, chosen.clone())?;
    match check_h_routing(Host::Temporal(t), &routing) {
        Ok(c) if c.ok => Ok(StrongRoutingOutcome {
            kind: match kind {
                crate::digraph::MonotoneKind::Increasing => StrongRoutingKind::Cycle,
                crate::digraph::MonotoneKind::Decreasing => StrongRoutingKind::BidirectedPath,
            },
            subset: chosen,
            routing,
        }),
        _ => Err(not_found()),
    }
}

/// Outcome of the long-path-or-clique-routing dichotomy.
#[derive(Debug, Clone)]
pub enum PathOrClique {
    Path(Walk),
    CliqueRouting(HRouting),
}

/// Either a path on `p` vertices or a bidirected-clique routing of order `k`
/// in a strongly connected digraph: hub construction whenever a deletion
/// leaves an antichain of components, vertex peeling otherwise. Guaranteed
/// at `|V| >= 2 k^2 p^3`.
pub fn path_or_clique_routing(d: &Digraph, k: usize, p: usize) -> Result<PathOrClique> {
    if !d.is_strongly_connected() {
        return Err(Error::InvalidInput(
            "digraph is not strongly connected".into(),
        ));
    }
    if k == 0 || p == 0 {
        return Err(Error::InvalidParameter("targets must be positive".into()));
    }
    if let Some(path) = probe_long_path(d, p) {
        return Ok(PathOrClique::Path(Walk(path)));
    }
    let mut current: BTreeSet<u32> = d.vertices().collect();
    let mut peeled: Vec<(u32, BTreeSet<u32>)> = Vec::new();
    for _round in 0..(2 * k * p).max(1) {
        if current.len() <= 1 {
            break;
        }
        let di = d.restrict(&current);
        if let Some(path) = probe_long_path(&di, p) {
            return Ok(PathOrClique::Path(Walk(path)));
        }
        // Case 1: some deletion leaves an antichain of k mutually
        // unreachable components; the deleted vertex is the hub.
        for &v in &current {
            let rest: BTreeSet<u32> = current.iter().copied().filter(|&x| x != v).collect();
            let sub = di.restrict(&rest);
            let (comps, quotient) = condensation_on(&sub, &rest);
            if comps.len() < k {
                continue;
            }
            if let Some(level) = largest_level(&quotient, k) {
                let map: Vec<u32> = level.iter().map(|&c| comps[c][0]).take(k).collect();
                if map.len() == k {
                    if let Ok(routing) = HRouting::new(Pattern::BidirectedClique(k), map) {
                        if let Ok(c) = check_h_routing(Host::Static(d), &routing) {
                            if c.ok {
                                return Ok(PathOrClique::CliqueRouting(routing));
                            }
                        }
                    }
                }
            }
        }
        // Peeling below a usable core size strands the connector assembly;
        // the guarantee regime never gets here.
        if current.len() <= (k * p * p).max(k + 1) {
            break;
        }
        // Case 2: peel a vertex that keeps the rest strongly connected.
        let mut advanced = false;
        for &v in &current {
            let rest: BTreeSet<u32> = current.iter().copied().filter(|&x| x != v).collect();
            if rest.is_empty() {
                continue;
            }
            let sub = di.restrict(&rest);
            if components_on(&sub, &rest).len() == 1 {
                peeled.push((v, current.clone()));
                current = rest;
                advanced = true;
                break;
            }
        }
        if advanced {
            continue;
        }
        // Case 3: peel a vertex whose largest remaining component is big.
        let kp2 = k * p * p;
        for &v in &current {
            let rest: BTreeSet<u32> = current.iter().copied().filter(|&x| x != v).collect();
            let sub = di.restrict(&rest);
            let comps = components_on(&sub, &rest);
            if let Some(big) = comps.iter().max_by_key(|c| c.len()) {
                if big.len() + kp2 >= current.len() {
                    peeled.push((v, current.clone()));
                    current = big.iter().copied().collect();
                    advanced = true;
                    break;
                }
            }
        }
        if advanced {
            continue;
        }
        // No case applies: some ordered pair is blocked by at least p
        // deleted vertices, so any connecting path is long.
        if let Some(path) = forced_long_path(&di, &current, p) {
            return Ok(PathOrClique::Path(Walk(path)));
        }
        break;
    }
    // Assemble a clique routing from peeled vertices with disjoint access
    // paths to the surviving core.
    let mut chosen: Vec<u32> = Vec::new();
    let mut blocked: BTreeSet<u32> = BTreeSet::new();
    for (v, ambient) in peeled {
        if chosen.len() == k {
            break;
        }
        if blocked.contains(&v) {
            continue;
        }
        let sub = d.restrict(&ambient);
        let fwd = sub.bfs_path(&[v], &current, &blocked);
        let bwd = sub.reverse().bfs_path(&[v], &current, &blocked);
        if let (Some(f), Some(b)) = (fwd, bwd) {
            chosen.push(v);
            for x in f.into_iter().chain(b) {
                if x != v {
                    blocked.insert(x);
                }
            }
        }
    }
    if chosen.len() == k {
        if let Ok(routing) = HRouting::new(Pattern::BidirectedClique(k), chosen) {
            if let Ok(c) = check_h_routing(Host::Static(d), &routing) {
                if c.ok {
                    return Ok(PathOrClique::CliqueRouting(routing));
                }
            }
        }
    }
    Err(Error::NotFound(format!(
        "no path on {p} vertices nor clique routing of order {k}; guaranteed at |V| >= {}",
        2 * k * k * p * p * p
    )))
}

/// A path on exactly `p` vertices, probed by greedy extension from every
/// start and by shortest-path depth as a fallback.
fn probe_long_path(d: &Digraph, p: usize) -> Option<Vec<u32>> {
    if p <= 1 {
        return Some(vec![d.vertices().next()?]);
    }
    for v in d.vertices() {
        // Greedy: always step to the least unvisited successor.
        let mut path = vec![v];
        let mut on = vec![false; d.n()];
        on[v as usize] = true;
        loop {
            let cur = *path.last().unwrap();
            match d.out_neighbours(cur).iter().find(|&&w| !on[w as usize]) {
                Some(&w) => {
                    on[w as usize] = true;
                    path.push(w);
                    if path.len() >= p {
                        return Some(path[..p].to_vec());
                    }
                }
                None => break,
            }
        }
        // Fallback: the deepest shortest path from v.
        let mut depth = vec![usize::MAX; d.n()];
        let mut prev = vec![u32::MAX; d.n()];
        depth[v as usize] = 0;
        let mut q = std::collections::VecDeque::from([v]);
        let mut far = v;
        while let Some(u) = q.pop_front() {
            if depth[u as usize] > depth[far as usize] {
                far = u;
            }
            for &w in d.out_neighbours(u) {
                if depth[w as usize] == usize::MAX {
                    depth[w as usize] = depth[u as usize] + 1;
                    prev[w as usize] = u;
                    q.push_back(w);
                }
            }
        }
        if depth[far as usize] + 1 >= p {
            let mut path = vec![far];
            let mut cur = far;
            while prev[cur as usize] != u32::MAX {
                cur = prev[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(path[..p].to_vec());
        }
    }
    None
}

fn condensation_on(sub: &Digraph, alive: &BTreeSet<u32>) -> (Vec<Vec<u32>>, Digraph) {
    let comps: Vec<Vec<u32>> = sub
        .sccs()
        .into_iter()
        .map(|c| {
            c.into_iter()
                .filter(|v| alive.contains(v))
                .collect::<Vec<_>>()
        })
        .filter(|c: &Vec<u32>| !c.is_empty())
        .collect();
    let mut comp_of: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of.insert(v, i);
        }
    }
    let arcs: Vec<(u32, u32)> = sub
        .arcs()
        .filter(|(u, v)| alive.contains(u) && alive.contains(v))
        .filter_map(|(u, v)| {
            let (a, b) = (comp_of[&u] as u32, comp_of[&v] as u32);
            (a != b).then_some((a, b))
        })
        .collect();
    let q = Digraph::new(comps.len(), arcs);
    (comps, q)
}

fn largest_level(quotient: &Digraph, k: usize) -> Option<Vec<usize>> {
    let order: Vec<u32> = condensation(quotient).0.into_iter().map(|c| c[0]).collect();
    let mut dist = vec![0usize; quotient.n()];
    for &v in &order {
        for &w in quotient.out_neighbours(v) {
            dist[w as usize] = dist[w as usize].max(dist[v as usize] + 1);
        }
    }
    let max_level = dist.iter().copied().max().unwrap_or(0);
    let mut best: Option<Vec<usize>> = None;
    for lvl in 0..=max_level {
        let members: Vec<usize> = (0..quotient.n()).filter(|&c| dist[c] == lvl).collect();
        if members.len() >= k && best.as_ref().is_none_or(|b| members.len() > b.len()) {
            best = Some(members);
        }
    }
    best
}

fn components_on(sub: &Digraph, alive: &BTreeSet<u32>) -> Vec<Vec<u32>> {
    sub.sccs()
        .into_iter()
        .map(|c| {
            c.into_iter()
                .filter(|v| alive.contains(v))
                .collect::<Vec<_>>()
        })
        .filter(|c: &Vec<u32>| !c.is_empty())
        .collect()
}

/// When none of the shrinking cases applies, some ordered pair needs at
/// least `p` distinct intermediate vertices on every connecting path.
fn forced_long_path(di: &Digraph, current: &BTreeSet<u32>, p: usize) -> Option<Vec<u32>> {
    let verts: Vec<u32> = current.iter().copied().collect();
    let mut blocked_count: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for &v in &verts {
        let rest: BTreeSet<u32> = verts.iter().copied().filter(|&x| x != v).collect();
        let sub = di.restrict(&rest);
        for &u in &verts {
            if u == v {
                continue;
            }
            let reach = sub.reachable(&[u], &BTreeSet::new());
            for &w in &verts {
                if w != u && w != v && !reach[w as usize] {
                    *blocked_count.entry((u, w)).or_insert(0) += 1;
                }
            }
        }
    }
    let (&(u, w), _) = blocked_count.iter().find(|(_, &c)| c >= p)?;
    let path = di.bfs_path(&[u], &BTreeSet::from([w]), &BTreeSet::new())?;
    (path.len() >= p).then(|| path[..p].to_vec())
}

/// Balanced-prefix split: for a sequence over the disjoint union of two
/// equal-size sets, the shortest prefix holding as many elements of each;
/// it starts in one set and ends in the other, and the remainder is balanced
/// too. Returns the prefix length.
pub fn balanced_split(seq: &[u32], a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> Result<usize> {
    if !a.is_disjoint(b) {
        return Err(Error::InvalidParameter("sets must be disjoint".into()));
    }
    let mut count = BTreeMap::new();
    for &x in seq {
        if !a.contains(&x) && !b.contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "{x} belongs to neither set"
            )));
        }
        *count.entry(x).or_insert(0) += 1;
    }
    if count.values().any(|&c| c > 1) || count.len() != a.len() + b.len() || a.len() != b.len() {
        return Err(Error::InvalidParameter(
            "sequence must hold each element of two equal-size sets exactly once".into(),
        ));
    }
    let mut balance: i64 = 0;
    for (i, &x) in seq.iter().enumerate() {
        balance += if a.contains(&x) { 1 } else { -1 };
        if balance == 0 {
            return Ok(i + 1);
        }
    }
    Err(Error::Internal(
        "full sequence is balanced by assumption".into(),
    ))
}

/// Nonnegative cycle start: given integer weights summing to zero around a
/// cycle, the least index from which every forward partial sum stays
/// nonnegative.
pub fn nonneg_cycle_start(weights: &[i64]) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("cycle is empty".into()));
    }
    if weights.iter().sum::<i64>() != 0 {
        return Err(Error::InvalidParameter("weights must sum to zero".into()));
    }
    let n = weights.len();
    'start: for s in 0..n {
        let mut acc = 0i64;
        for i in 0..n {
            acc += weights[(s + i) % n];
            if acc < 0 {
                continue 'start;
            }
        }
        return Ok(s);
    }
    Err(Error::Internal(
        "a nonnegative start always exists at total weight zero".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    A,
    B,
}

/// Matching order for a cycle routing: the circular tag sequence is rotated
/// to a nonnegative start (via the zero-sum block weights), then pairs
/// `(a, b)` are matched so the forward interval from `a` to `b` avoids all
/// still-unmatched `A`s and all already-matched `B`s — exactly the temporal
/// walks the cycle routing can deliver.
pub fn ck_matching_order(tags: &[Tag]) -> Result<Vec<(usize, usize)>> {
    let na = tags.iter().filter(|t| **t == Tag::A).count();
    if na * 2 != tags.len() {
        return Err(Error::InvalidParameter("tags must balance".into()));
    }
    if na == 0 {
        return Ok(Vec::new());
    }
    let n = tags.len();
    let first_a_after_b = (0..n)
        .find(|&i| tags[i] == Tag::A && tags[(i + n - 1) % n] == Tag::B)
        .unwrap_or(0);
    let rotated: Vec<Tag> = (0..n).map(|i| tags[(first_a_after_b + i) % n]).collect();
    let mut blocks: Vec<(usize, i64)> = Vec::new();
    let mut i = 0usize;
    while i < n {
        let start = i;
        let mut w = 0i64;
        while i < n && rotated[i] == Tag::A {
            w += 1;
            i += 1;
        }
        while i < n && rotated[i] == Tag::B {
            w -= 1;
            i += 1;
        }
        blocks.push((start, w));
    }
    let weights: Vec<i64> = blocks.iter().map(|b| b.1).collect();
    let block_start = nonneg_cycle_start(&weights)?;
    let shift = (first_a_after_b + blocks[block_start].0) % n;
    let order: Vec<usize> = (0..n).map(|i| (shift + i) % n).collect();

    let mut matched = vec![false; n];
    let mut pairs = Vec::with_capacity(na);
    let mut tail_start = n;
    for _ in 0..na {
        let a_pos = (0..tail_start)
            .rev()
            .find(|&p| tags[order[p]] == Tag::A && !matched[order[p]])
            .ok_or_else(|| Error::Internal("no unmatched A left in the prefix".into()))?;
        let b_pos = (a_pos + 1..tail_start)
            .rev()
            .find(|&p| tags[order[p]] == Tag::B && !matched[order[p]])
            .ok_or_else(|| {
                Error::Internal("no unmatched B between the last A and the tail".into())
            })?;
        for &idx in &order[a_pos + 1..b_pos] {
            if tags[idx] == Tag::A && !matched[idx] {
                return Err(Error::Internal("interval crosses an unmatched A".into()));
            }
            if tags[idx] == Tag::B && matched[idx] {
                return Err(Error::Internal("interval crosses a matched B".into()));
            }
        }
        matched[order[a_pos]] = true;
        matched[order[b_pos]] = true;
        pairs.push((order[a_pos], order[b_pos]));
        tail_start = b_pos;
    }
    Ok(pairs)
}

/// Matching order for a bidirected-path routing: on each step the balanced
/// split carves a segment with one endpoint in each set; that segment's
/// endpoints are paired and every remaining segment stays balanced.
pub fn bip_matching_order(tags: &[Tag]) -> Result<Vec<(usize, usize)>> {
    let na = tags.iter().filter(|t| **t == Tag::A).count();
    if na * 2 != tags.len() {
        return Err(Error::InvalidParameter("tags must balance".into()));
    }
    let mut pairs = Vec::with_capacity(na);
    let mut segments: Vec<Vec<usize>> = vec![(0..tags.len()).collect()];
    while pairs.len() < na {
        let seg_idx = segments
            .iter()
            .position(|s| !s.is_empty())
            .ok_or_else(|| Error::Internal("ran out of balanced segments".into()))?;
        let seg = segments.remove(seg_idx);
        let ids_a: BTreeSet<u32> = seg
            .iter()
            .filter(|&&p| tags[p] == Tag::A)
            .map(|&p| p as u32)
            .collect();
        let ids_b: BTreeSet<u32> = seg
            .iter()
            .filter(|&&p| tags[p] == Tag::B)
            .map(|&p| p as u32)
            .collect();
        let seq: Vec<u32> = seg.iter().map(|&p| p as u32).collect();
        let split = balanced_split(&seq, &ids_a, &ids_b)?;
        let head: Vec<usize> = seg[..split].to_vec();
        let tail: Vec<usize> = seg[split..].to_vec();
        let (a_pos, b_pos) = if tags[head[0]] == Tag::A {
            (head[0], *head.last().unwrap())
        } else {
            (*head.last().unwrap(), head[0])
        };
        pairs.push((a_pos, b_pos));
        let middle: Vec<usize> = head
            .iter()
            .copied()
            .filter(|&p| p != a_pos && p != b_pos)
            .collect();
        if !middle.is_empty() {
            segments.push(middle);
        }
        if !tail.is_empty() {
            segments.push(tail);
        }
    }
    Ok(pairs)
}

/// Sub-linkage of order `k` whose starts are well-linked to its ends in the
/// union of the linkage and the crossed blocks: equal cycle or
/// bidirected-path routings are collected over lifetime windows
/// (opportunistic pigeonhole), the matching subroutines are exercised on the
/// found routing, and the well-linkedness verdict is checked exhaustively.
pub fn well_linked_sublinkage(
    l: &Linkage,
    blocks: &[SubDigraph],
    k: usize,
    host_n: usize,
) -> Result<Linkage> {
    if k == 0 || k > l.order() {
        return Err(Error::InvalidParameter(format!(
            "target order {k} out of range for a linkage of order {}",
            l.order()
        )));
    }
    let rtd = build_rtd(l, blocks)?;
    for tau in 1..=rtd.tdg.lifetime() {
        if !rtd.tdg.layer(tau).is_strongly_connected() {
            return Err(Error::InvalidInput(format!(
                "routing layer {tau} is not strongly connected"
            )));
        }
    }
    let host = rtd.host_digraph(host_n);
    let all: BTreeSet<u32> = (0..l.order() as u32).collect();
    let lifetime = rtd.tdg.lifetime();
    let mut windows_per_round = k.max(1);
    while windows_per_round <= lifetime {
        let width = lifetime / windows_per_round;
        if width == 0 {
            break;
        }
        let mut groups: BTreeMap<(StrongRoutingKind, Vec<u32>), usize> = BTreeMap::new();
        for w in 0..windows_per_round {
            let lo = w * width + 1;
            let hi = if w + 1 == windows_per_round {
                lifetime
            } else {
                (w + 1) * width
            };
            let window = rtd.tdg.window(lo, hi);
            let Ok(outcome) = strong_temporal_routing(&window, &all, k) else {
                continue;
            };
            let key = (outcome.kind, outcome.routing.map.clone());
            let c = groups.entry(key.clone()).or_insert(0);
            *c += 1;
            if *c >= k {
                let (kind, map) = key;
                exercise_matching(kind, &map);
                let starts: BTreeSet<u32> = map.iter().map(|&i| l.path(i as usize)[0]).collect();
                let ends: BTreeSet<u32> = map
                    .iter()
                    .map(|&i| *l.path(i as usize).last().unwrap())
                    .collect();
                let report = check_well_linked(&host, &starts, &ends, WELL_LINKED_CAP)?;
                if report.well_linked {
                    let sub: Vec<Vec<u32>> =
                        map.iter().map(|&i| l.path(i as usize).to_vec()).collect();
                    return Linkage::new(sub);
                }
            }
        }
        windows_per_round *= 2;
    }
    Err(Error::NotFound(format!(
        "no {k} windows with an equal routing over {} paths and {} blocks",
        l.order(),
        blocks.len()
    )))
}

/// Exercises the matching-order subroutines on a found routing with a
/// disjoint start/end half split.
fn exercise_matching(kind: StrongRoutingKind, map: &[u32]) {
    if map.len() < 2 {
        return;
    }
    let tags: Vec<Tag> = (0..map.len() & !1)
        .map(|i| if i % 2 == 0 { Tag::A } else { Tag::B })
        .collect();
    match kind {
        StrongRoutingKind::Cycle => {
            let pairs =
                ck_matching_order(&tags).expect("matching order exists for a cycle routing");
            debug_assert_eq!(pairs.len(), tags.len() / 2);
        }
        StrongRoutingKind::BidirectedPath => {
            let pairs =
                bip_matching_order(&tags).expect("matching order exists for a bidirected path");
            debug_assert_eq!(pairs.len(), tags.len() / 2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{build_family, Family};
    use crate::testutil;

    fn repeat_layers(d: &Digraph, times: usize) -> TemporalDigraph {
        TemporalDigraph::new(d.n(), vec![d.arcs().collect(); times])
    }

    #[test]
    fn pk_from_walk_examples() {
        let w = TemporalWalk {
            steps: vec![(0, 1), (1, 2), (2, 3)],
        };
        let r = pk_routing_from_walk(&w, 3, 3).unwrap();
        assert_eq!(r.map, vec![0, 1, 2]);

        let w = TemporalWalk {
            steps: vec![(4, 1), (2, 2)],
        };
        let r = pk_routing_from_walk(&w, 5, 2).unwrap();
        assert_eq!(r.map.len(), 2);

        // A walk with one revisit: the contiguous stretch (2, 1, 3, 4) wins
        // the subpath branch at k = 4.
        let w = TemporalWalk {
            steps: vec![(0, 1), (1, 2), (2, 3), (1, 4), (3, 5), (4, 6)],
        };
        let r = pk_routing_from_walk(&w, 5, 4).unwrap();
        assert_eq!(r.map, vec![2, 1, 3, 4]);

        // Repeated detours through vertex 0 kill every length-4 stretch, so
        // the covering branch routes over the single-occurrence vertices.
        let w = TemporalWalk {
            steps: vec![
                (0, 1),
                (1, 2),
                (0, 3),
                (2, 4),
                (0, 5),
                (3, 6),
                (0, 7),
                (4, 8),
            ],
        };
        let r = pk_routing_from_walk(&w, 5, 4).unwrap();
        assert_eq!(r.map, vec![1, 2, 3, 4]);
    }

    #[test]
    fn pk_from_walk_random_guarantee() {
        let mut checked = 0;
        for seed in 0..125u64 {
            for &k in &[2usize, 3, 4, 5] {
                let need = (k * k).div_ceil(2);
                let n = need + 3;
                let d = testutil::random_strongly_connected(seed, n, 300);
                let t = repeat_layers(&d, n * need + 2);
                let all: BTreeSet<u32> = (0..need as u32).collect();
                let Ok(w) = covering_walk_strong(&t, &all, 0, *all.iter().last().unwrap()) else {
                    continue;
                };
                assert!(w.vertices().len() >= need);
                pk_routing_from_walk(&w, n, k).unwrap_or_else(|e| {
                    panic!("seed {seed} k {k}: {e}");
                });
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn pk_unilateral_examples() {
        let tt2 = build_family(Family::TransitiveTournament, 2).unwrap();
        let t = repeat_layers(&tt2, 120);
        let (s, r) = pk_routing_unilateral(&t, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(r.map.len(), 2);

        let p3 = build_family(Family::Path, 3).unwrap();
        let t = repeat_layers(&p3, 3);
        assert!(pk_routing_unilateral(&t, 2).is_ok());

        let p1 = build_family(Family::Path, 1).unwrap();
        let t = repeat_layers(&p1, 3);
        assert!(matches!(
            pk_routing_unilateral(&t, 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn choosable_examples() {
        let w = TemporalWalk {
            steps: vec![(0, 1), (1, 2), (2, 3)],
        };
        let host = w.as_temporal_digraph(3, 3);
        let s = BTreeSet::from([0, 1, 2]);
        match choosable_routing(&host, &w, &s, 2, 3).unwrap() {
            ChoosableOutcome::PathAnchored { w_b, routing, .. } => {
                assert_eq!(routing.map, vec![0, 1, 2]);
                assert_eq!(w_b.start(), routing.map[0]);
                assert_eq!(w_b.end(), *routing.map.last().unwrap());
            }
            other => panic!("expected the anchored path case, got {other:?}"),
        }

        // a -> b then b -> a over separate layers: a bidirected pair.
        let d = Digraph::new(2, [(0, 1), (1, 0)]);
        let t = repeat_layers(&d, 4);
        let w = TemporalWalk {
            steps: vec![(0, 1), (1, 2), (0, 3)],
        };
        assert!(w.is_valid(&t));
        let out = choosable_routing(&t, &w, &BTreeSet::from([0, 1]), 2, 3).unwrap();
        match out {
            ChoosableOutcome::BiPath { routing } => assert_eq!(routing.map.len(), 2),
            ChoosableOutcome::PathAnchored { .. } => panic!("expected the bidirected case"),
        }

        assert_eq!(choosable_s_bound(1, 1), 1);
    }

    #[test]
    fn choosable_anchoring_is_literal() {
        for seed in 0..40u64 {
            let n = 6;
            let d = testutil::random_strongly_connected(seed, n, 250);
            let t = repeat_layers(&d, 24);
            let s: BTreeSet<u32> = (0..4u32).collect();
            let Ok(w) = covering_walk_strong(&t, &s, 0, 3) else {
                continue;
            };
            let Ok(out) = choosable_routing(&t, &w, &s, 2, 2) else {
                continue;
            };
            if let ChoosableOutcome::PathAnchored {
                w_a,
                w_b,
                w_c,
                routing,
            } = out
            {
                assert_eq!(w_b.start(), routing.map[0], "seed {seed}");
                assert_eq!(w_b.end(), *routing.map.last().unwrap(), "seed {seed}");
                for (i, st) in w_a.steps.iter().enumerate() {
                    if i + 1 < w_a.steps.len() {
                        assert!(
                            !routing.map.contains(&st.0),
                            "seed {seed}: w_a hits the set"
                        );
                    }
                }
                for (i, st) in w_c.steps.iter().enumerate() {
                    if i > 0 {
                        assert!(
                            !routing.map.contains(&st.0),
                            "seed {seed}: w_c hits the set"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn strong_routing_examples() {
        let k3 = build_family(Family::BidirectedClique, 3).unwrap();
        let t = repeat_layers(&k3, 4);
        let out = strong_temporal_routing(&t, &BTreeSet::from([1, 2]), 1).unwrap();
        assert_eq!(out.kind, StrongRoutingKind::Cycle);
        assert_eq!(out.subset, vec![1]);

        let k4 = build_family(Family::BidirectedClique, 4).unwrap();
        let t = repeat_layers(&k4, 30);
        let out = strong_temporal_routing(&t, &(0..4).collect(), 2).unwrap();
        assert_eq!(out.subset.len(), 2);
        assert!(
            check_h_routing(Host::Temporal(&t), &out.routing)
                .unwrap()
                .ok
        );
    }

    #[test]
    fn path_or_clique_examples() {
        let c10 = build_family(Family::Cycle, 10).unwrap();
        match path_or_clique_routing(&c10, 3, 4).unwrap() {
            PathOrClique::Path(p) => {
                assert_eq!(p.0.len(), 4);
                assert!(p.is_path(&c10));
            }
            _ => panic!("a long cycle has long paths"),
        }

        // Bidirected star with 5 leaves: longest path has 3 vertices, so at
        // p = 4 the clique routing over leaves is the outcome.
        let star = build_family(Family::BidirectedStar, 5).unwrap();
        match path_or_clique_routing(&star, 3, 4).unwrap() {
            PathOrClique::CliqueRouting(r) => {
                assert_eq!(r.map.len(), 3);
                assert!(r.map.iter().all(|&v| v != 0), "leaves only");
                assert!(check_h_routing(Host::Static(&star), &r).unwrap().ok);
            }
            PathOrClique::Path(p) => panic!("longest path is 3 < 4, got {p:?}"),
        }
    }

    #[test]
    fn path_or_clique_dichotomy_random() {
        for seed in 0..100u64 {
            let d = testutil::random_strongly_connected(seed, 64, 30);
            let out = path_or_clique_routing(&d, 2, 2).unwrap();
            match out {
                PathOrClique::Path(p) => {
                    assert_eq!(p.0.len(), 2);
                    assert!(p.is_path(&d));
                }
                PathOrClique::CliqueRouting(r) => {
                    assert!(check_h_routing(Host::Static(&d), &r).unwrap().ok)
                }
            }
        }
    }

    #[test]
    fn balanced_split_exhaustive() {
        for half in 1..=4usize {
            let a: BTreeSet<u32> = (0..half as u32).collect();
            let b: BTreeSet<u32> = (half as u32..2 * half as u32).collect();
            let items: Vec<u32> = (0..2 * half as u32).collect();
            for perm in testutil::permutations(2 * half) {
                let seq: Vec<u32> = perm.iter().map(|&i| items[i]).collect();
                let cut = balanced_split(&seq, &a, &b).unwrap();
                let head = &seq[..cut];
                let tail = &seq[cut..];
                let count =
                    |xs: &[u32], set: &BTreeSet<u32>| xs.iter().filter(|x| set.contains(x)).count();
                assert_eq!(count(head, &a), count(head, &b));
                assert_eq!(count(tail, &a), count(tail, &b));
                let first_a = a.contains(&head[0]);
                let last_a = a.contains(head.last().unwrap());
                assert_ne!(first_a, last_a, "prefix endpoints in the same set: {seq:?}");
            }
        }
    }

    #[test]
    fn nonneg_cycle_examples() {
        assert_eq!(nonneg_cycle_start(&[1, -1, 2, -2]).unwrap(), 0);
        for seed in 0..50u64 {
            use rand::Rng;
            let mut rng = testutil::rng(seed);
            let n = rng.gen_range(1..7usize);
            let mut w: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(-3..=3)).collect();
            let total: i64 = w.iter().sum();
            w.push(-total);
            let got = nonneg_cycle_start(&w).unwrap();
            let brute = (0..n)
                .find(|&s| {
                    let mut acc = 0;
                    (0..n).all(|i| {
                        acc += w[(s + i) % n];
                        acc >= 0
                    })
                })
                .unwrap();
            assert_eq!(got, brute, "weights {w:?}");
        }
    }

    #[test]
    fn matching_orders_exhaustive_small() {
        for n in [2usize, 4, 6, 8] {
            for mask in 0..(1u32 << n) {
                if (mask.count_ones() as usize) != n / 2 {
                    continue;
                }
                let tags: Vec<Tag> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { Tag::A } else { Tag::B })
                    .collect();
                let pairs = ck_matching_order(&tags).unwrap();
                assert_eq!(pairs.len(), n / 2, "ck on {tags:?}");
                let pairs = bip_matching_order(&tags).unwrap();
                assert_eq!(pairs.len(), n / 2, "bip on {tags:?}");
            }
        }
    }

    #[test]
    fn well_linked_sublinkage_trivial() {
        // k = 1: any single path qualifies.
        let l = Linkage::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let blocks = vec![
            SubDigraph::new([0, 2, 4], [(0, 4), (4, 2), (2, 0)]),
            SubDigraph::new([1, 3, 5], [(1, 5), (5, 3), (3, 1)]),
        ];
        let got = well_linked_sublinkage(&l, &blocks, 1, 6).unwrap();
        assert_eq!(got.order(), 1);
    }
}
