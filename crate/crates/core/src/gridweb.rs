//! Generators and verifiers for the grid-like structures — cylindrical
//! grids, fences, acyclic grids, webs, semi-webs, ordered and folded webs,
//! splits and segmentations — plus the in-family conversions.

use std::collections::{BTreeMap, BTreeSet};

use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::linkage::{check_well_linked, is_h_minimal, Linkage, WELL_LINKED_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Web,
    SemiWeb,
    OrderedWeb,
    FoldedWeb,
    FoldedOrderedWeb,
    Fence,
    AcyclicGrid,
    CylindricalGrid,
    Split,
    Segmentation,
    OrderedSegmentation,
}

impl StructureKind {
    pub fn name(&self) -> &'static str {
        match self {
            StructureKind::Web => "web",
            StructureKind::SemiWeb => "semi-web",
            StructureKind::OrderedWeb => "ordered-web",
            StructureKind::FoldedWeb => "folded-web",
            StructureKind::FoldedOrderedWeb => "folded-ordered-web",
            StructureKind::Fence => "fence",
            StructureKind::AcyclicGrid => "acyclic-grid",
            StructureKind::CylindricalGrid => "cylindrical-grid",
            StructureKind::Split => "split",
            StructureKind::Segmentation => "segmentation",
            StructureKind::OrderedSegmentation => "ordered-segmentation",
        }
    }

    pub fn parse(s: &str) -> Result<StructureKind> {
        Ok(match s {
            "web" => StructureKind::Web,
            "semi-web" => StructureKind::SemiWeb,
            "ordered-web" => StructureKind::OrderedWeb,
            "folded-web" => StructureKind::FoldedWeb,
            "folded-ordered-web" => StructureKind::FoldedOrderedWeb,
            "fence" => StructureKind::Fence,
            "acyclic-grid" => StructureKind::AcyclicGrid,
            "cylindrical-grid" => StructureKind::CylindricalGrid,
            "split" => StructureKind::Split,
            "segmentation" => StructureKind::Segmentation,
            "ordered-segmentation" => StructureKind::OrderedSegmentation,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown structure kind {other:?}"
                )))
            }
        })
    }
}

/// Kind-specific extras carried by a structured pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StructureMeta {
    /// Semi-web degree.
    pub degree: Option<usize>,
    /// Cylindrical grid: the arcs closing each row back into a cycle.
    pub closing_arcs: Vec<(u32, u32)>,
    /// Split: the cut arcs between consecutive pieces of the original path.
    pub cut_arcs: Vec<(u32, u32)>,
    /// Splits and segmentations carry the reference linkage whose arcs the
    /// cuts must avoid.
    pub q_star: Option<Linkage>,
    /// Ordered segmentation: the common ordering as indices into `q`.
    pub ordering: Vec<usize>,
    /// Claim that End of the designated side is well-linked to its Start.
    pub well_linked: bool,
    /// Folded web: for each vertical, the index where the first half ends.
    pub fold_splits: Vec<usize>,
}

/// Two linkages tagged with a structure kind. For web kinds `p` holds the
/// horizontals and `q` the verticals; for fences and grids `p` holds the
/// columns/rows named first in their definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredPair {
    pub kind: StructureKind,
    pub p: Linkage,
    pub q: Linkage,
    pub meta: StructureMeta,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub ok: bool,
    pub violated: Option<String>,
}

impl VerifyOutcome {
    fn fail(clause: impl Into<String>) -> VerifyOutcome {
        VerifyOutcome {
            ok: false,
            violated: Some(clause.into()),
        }
    }

    fn pass() -> VerifyOutcome {
        VerifyOutcome {
            ok: true,
            violated: None,
        }
    }
}

/// Canonical generators. Grid vertex numbering is row-major; cylindrical
/// grids are cycle-major.
pub fn generate_canonical(
    kind: StructureKind,
    params: &[usize],
) -> Result<(Digraph, StructuredPair)> {
    match kind {
        StructureKind::AcyclicGrid => {
            let [p, q] = two_params(params)?;
            Ok(acyclic_grid(p, q))
        }
        StructureKind::Fence => {
            let [p, q] = two_params(params)?;
            Ok(fence(p, q))
        }
        StructureKind::CylindricalGrid => {
            let [k] = one_param(params)?;
            Ok(cylindrical_grid(k))
        }
        other => Err(Error::InvalidParameter(format!(
            "no canonical generator for {}",
            other.name()
        ))),
    }
}

fn one_param(params: &[usize]) -> Result<[usize; 1]> {
    match params {
        [a] if *a >= 1 => Ok([*a]),
        _ => Err(Error::InvalidParameter(
            "expected one positive parameter".into(),
        )),
    }
}

fn two_params(params: &[usize]) -> Result<[usize; 2]> {
    match params {
        [a, b] if *a >= 1 && *b >= 1 => Ok([*a, *b]),
        _ => Err(Error::InvalidParameter(
            "expected two positive parameters".into(),
        )),
    }
}

/// Acyclic `(p, q)`-grid: `p` rows running left to right, `q` columns all
/// running downward; vertex `(i, j)` has id `i * q + j`.
pub fn acyclic_grid(p: usize, q: usize) -> (Digraph, StructuredPair) {
    let id = |i: usize, j: usize| (i * q + j) as u32;
    let mut arcs = Vec::new();
    let mut rows = Vec::with_capacity(p);
    for i in 0..p {
        let row: Vec<u32> = (0..q).map(|j| id(i, j)).collect();
        arcs.extend(row.windows(2).map(|w| (w[0], w[1])));
        rows.push(row);
    }
    let mut cols = Vec::with_capacity(q);
    for j in 0..q {
        let col: Vec<u32> = (0..p).map(|i| id(i, j)).collect();
        arcs.extend(col.windows(2).map(|w| (w[0], w[1])));
        cols.push(col);
    }
    let d = Digraph::new(p * q, arcs);
    let pair = StructuredPair {
        kind: StructureKind::AcyclicGrid,
        p: Linkage::new(rows).unwrap(),
        q: Linkage::new(cols).unwrap(),
        meta: StructureMeta::default(),
    };
    (d, pair)
}

/// `(p, q)`-fence: `2p` alternating columns and `q` rows; vertex `(r, c)`
/// has id `r * 2p + c`. Odd columns (1-based) run downward.
pub fn fence(p: usize, q: usize) -> (Digraph, StructuredPair) {
    let width = 2 * p;
    let id = |r: usize, c: usize| (r * width + c) as u32;
    let mut arcs = Vec::new();
    let mut rows = Vec::with_capacity(q);
    for r in 0..q {
        let row: Vec<u32> = (0..width).map(|c| id(r, c)).collect();
        arcs.extend(row.windows(2).map(|w| (w[0], w[1])));
        rows.push(row);
    }
    let mut cols = Vec::with_capacity(width);
    for c in 0..width {
        let mut col: Vec<u32> = (0..q).map(|r| id(r, c)).collect();
        if c % 2 == 1 {
            col.reverse();
        }
        arcs.extend(col.windows(2).map(|w| (w[0], w[1])));
        cols.push(col);
    }
    let d = Digraph::new(q * width, arcs);
    let pair = StructuredPair {
        kind: StructureKind::Fence,
        p: Linkage::new(cols).unwrap(),
        q: Linkage::new(rows).unwrap(),
        meta: StructureMeta::default(),
    };
    (d, pair)
}

/// Cylindrical grid of order `k`: `k` concentric cycles of length `2k`
/// crossed by `2k` alternating paths; vertex `(i, j)` (cycle `i`, position
/// `j`) has id `i * 2k + j`. The pair holds the dissection: rows are the
/// cycles opened at the arc entering the first crossing path, with those
/// closing arcs in the metadata.
pub fn cylindrical_grid(k: usize) -> (Digraph, StructuredPair) {
    let width = 2 * k;
    let id = |i: usize, j: usize| (i * width + j) as u32;
    let mut arcs = Vec::new();
    let mut rows = Vec::with_capacity(k);
    let mut closing = Vec::with_capacity(k);
    for i in 0..k {
        let row: Vec<u32> = (0..width).map(|j| id(i, j)).collect();
        arcs.extend(row.windows(2).map(|w| (w[0], w[1])));
        let close = (id(i, width - 1), id(i, 0));
        arcs.push(close);
        closing.push(close);
        rows.push(row);
    }
    let mut cols = Vec::with_capacity(width);
    for j in 0..width {
        let mut col: Vec<u32> = (0..k).map(|i| id(i, j)).collect();
        if j % 2 == 1 {
            col.reverse();
        }
        arcs.extend(col.windows(2).map(|w| (w[0], w[1])));
        cols.push(col);
    }
    let d = Digraph::new(k * width, arcs);
    let pair = StructuredPair {
        kind: StructureKind::CylindricalGrid,
        p: Linkage::new(cols).unwrap(),
        q: Linkage::new(rows).unwrap(),
        meta: StructureMeta {
            closing_arcs: closing,
            ..StructureMeta::default()
        },
    };
    (d, pair)
}

/// The intersection `P ∩ Q` of two paths as a digraph: it must be a single
/// directed path spanning every common vertex. Returns the common vertices
/// in path order, or `None` when the intersection is empty or not a path.
fn intersection_path(p: &[u32], q: &[u32]) -> Option<Vec<u32>> {
    let qs: BTreeSet<u32> = q.iter().copied().collect();
    let common: Vec<u32> = p.iter().copied().filter(|v| qs.contains(v)).collect();
    if common.is_empty() {
        return None;
    }
    if common.len() == 1 {
        return Some(common);
    }
    let p_arcs: BTreeSet<(u32, u32)> = p.windows(2).map(|w| (w[0], w[1])).collect();
    let q_arcs: BTreeSet<(u32, u32)> = q.windows(2).map(|w| (w[0], w[1])).collect();
    // The common vertices must be consecutive on p, and each consecutive
    // pair must be an arc of both paths.
    let first = p.iter().position(|v| qs.contains(v)).unwrap();
    let seg = &p[first..first + common.len()];
    if seg.iter().any(|v| !qs.contains(v)) {
        return None;
    }
    for w in seg.windows(2) {
        let arc = (w[0], w[1]);
        if !p_arcs.contains(&arc) || !q_arcs.contains(&arc) {
            return None;
        }
    }
    Some(seg.to_vec())
}

fn position_of(path: &[u32], v: u32) -> usize {
    path.iter()
        .position(|&x| x == v)
        .expect("vertex lies on the path")
}

/// Block span `(first, last)` of the intersection along `host_path`.
fn block_span(host_path: &[u32], block: &[u32]) -> (usize, usize) {
    let lo = position_of(host_path, block[0]);
    let hi = position_of(host_path, *block.last().unwrap());
    (lo.min(hi), lo.max(hi))
}

/// Clause-by-clause verification in definition order. The host digraph
/// grounds path validity; well-linked claims are checked through the
/// linkages module when the terminal sets fit under its cap.
pub fn verify_structure(host: &Digraph, pair: &StructuredPair) -> VerifyOutcome {
    if !pair.p.is_valid_in(host) || !pair.q.is_valid_in(host) {
        return VerifyOutcome::fail("linkage paths are not paths of the host");
    }
    let out = match pair.kind {
        StructureKind::Web => verify_web(pair, None),
        StructureKind::SemiWeb => match pair.meta.degree {
            Some(d) => verify_web(pair, Some(d)),
            None => VerifyOutcome::fail("semi-web carries no degree"),
        },
        StructureKind::OrderedWeb => verify_ordered_web(pair),
        StructureKind::FoldedWeb => verify_folded_web(pair),
        StructureKind::FoldedOrderedWeb => {
            let o = verify_ordered_web(pair);
            if o.ok {
                verify_folded_web(pair)
            } else {
                o
            }
        }
        StructureKind::Fence => verify_fence_like(pair, true),
        StructureKind::AcyclicGrid => verify_fence_like(pair, false),
        StructureKind::CylindricalGrid => verify_cylindrical(host, pair),
        StructureKind::Split => verify_split(pair),
        StructureKind::Segmentation => verify_segmentation(pair, false),
        StructureKind::OrderedSegmentation => verify_segmentation(pair, true),
    };
    if !out.ok {
        return out;
    }
    if pair.meta.well_linked {
        let side = match pair.kind {
            StructureKind::Split => &pair.q,
            StructureKind::Segmentation | StructureKind::OrderedSegmentation => &pair.p,
            _ => &pair.q,
        };
        let ends = side.end_set();
        let starts = side.start_set();
        if ends.len() <= WELL_LINKED_CAP && starts.len() <= WELL_LINKED_CAP {
            match check_well_linked(host, &ends, &starts, WELL_LINKED_CAP) {
                Ok(r) if r.well_linked => {}
                Ok(_) => return VerifyOutcome::fail("claimed well-linkedness fails"),
                Err(e) => return VerifyOutcome::fail(format!("well-linkedness check: {e}")),
            }
        }
    }
    VerifyOutcome::pass()
}

fn verify_web(pair: &StructuredPair, degree: Option<usize>) -> VerifyOutcome {
    let need = degree.unwrap_or(pair.p.order());
    for (qi, qp) in pair.q.paths().iter().enumerate() {
        let qset: BTreeSet<u32> = qp.iter().copied().collect();
        let met = pair
            .p
            .paths()
            .iter()
            .filter(|pp| pp.iter().any(|v| qset.contains(v)))
            .count();
        if met < need {
            return VerifyOutcome::fail(format!(
                "vertical {qi} meets only {met} horizontals, needs {need}"
            ));
        }
    }
    VerifyOutcome::pass()
}

fn verify_ordered_web(pair: &StructuredPair) -> VerifyOutcome {
    let w = verify_web(pair, None);
    if !w.ok {
        return w;
    }
    // With the stored vertical order, the vertical index sequence along
    // every horizontal must be non-decreasing and hit every vertical.
    let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (j, v) in pair.q.paths().iter().enumerate() {
        for &x in v {
            owner.insert(x, j);
        }
    }
    for (hi, h) in pair.p.paths().iter().enumerate() {
        let labels: Vec<usize> = h.iter().filter_map(|v| owner.get(v).copied()).collect();
        if labels.windows(2).any(|w| w[0] > w[1]) {
            return VerifyOutcome::fail(format!("horizontal {hi} crosses verticals out of order"));
        }
        let seen: BTreeSet<usize> = labels.iter().copied().collect();
        if seen.len() != pair.q.order() {
            return VerifyOutcome::fail(format!("horizontal {hi} misses a vertical"));
        }
    }
    VerifyOutcome::pass()
}

fn verify_folded_web(pair: &StructuredPair) -> VerifyOutcome {
    let w = verify_web(pair, None);
    if !w.ok {
        return w;
    }
    for (vi, v) in pair.q.paths().iter().enumerate() {
        // Earliest index by which the prefix meets all horizontals, and
        // latest from which the suffix still does.
        let meets_all = |seg: &[u32]| {
            let set: BTreeSet<u32> = seg.iter().copied().collect();
            pair.p
                .paths()
                .iter()
                .all(|h| h.iter().any(|x| set.contains(x)))
        };
        let t1 = (0..v.len()).find(|&s| meets_all(&v[..=s]));
        let t2 = (0..v.len()).rev().find(|&s| meets_all(&v[s..]));
        match (t1, t2) {
            (Some(a), Some(b)) if a <= b => {}
            _ => return VerifyOutcome::fail(format!("vertical {vi} admits no fold point")),
        }
    }
    VerifyOutcome::pass()
}

fn verify_fence_like(pair: &StructuredPair, fence: bool) -> VerifyOutcome {
    let cols = pair.p.paths();
    let rows = pair.q.paths();
    if fence && !cols.len().is_multiple_of(2) {
        return VerifyOutcome::fail("a fence has an even number of columns");
    }
    // Intersections are paths.
    let mut blocks: Vec<Vec<Vec<u32>>> = Vec::with_capacity(cols.len());
    for (i, c) in cols.iter().enumerate() {
        let mut row_blocks = Vec::with_capacity(rows.len());
        for (j, r) in rows.iter().enumerate() {
            match intersection_path(c, r) {
                Some(b) => row_blocks.push(b),
                None => {
                    return VerifyOutcome::fail(format!(
                        "intersection of column {i} and row {j} is not a nonempty path"
                    ))
                }
            }
        }
        blocks.push(row_blocks);
    }
    // Along every row, column blocks appear in column order.
    for (j, r) in rows.iter().enumerate() {
        let mut prev_end: Option<usize> = None;
        for (i, _) in cols.iter().enumerate() {
            let (lo, hi) = block_span(r, &blocks[i][j]);
            if let Some(pe) = prev_end {
                if lo <= pe {
                    return VerifyOutcome::fail(format!(
                        "columns {i} and {} overlap or invert along row {j}",
                        i - 1
                    ));
                }
            }
            prev_end = Some(hi);
        }
    }
    // Along every column, rows appear downward (odd 1-based columns) or
    // upward (even) for fences; always downward for acyclic grids.
    for (i, c) in cols.iter().enumerate() {
        let reversed = fence && i % 2 == 1;
        let mut prev_end: Option<usize> = None;
        let row_iter: Vec<usize> = if reversed {
            (0..rows.len()).rev().collect()
        } else {
            (0..rows.len()).collect()
        };
        for j in row_iter {
            let (lo, hi) = block_span(c, &blocks[i][j]);
            if let Some(pe) = prev_end {
                if lo <= pe {
                    return VerifyOutcome::fail(format!(
                        "rows out of order along column {i} at row {j}"
                    ));
                }
            }
            prev_end = Some(hi);
        }
    }
    VerifyOutcome::pass()
}

fn verify_cylindrical(host: &Digraph, pair: &StructuredPair) -> VerifyOutcome {
    let k = pair.q.order();
    if pair.p.order() != 2 * k {
        return VerifyOutcome::fail("a cylindrical grid of order k needs 2k crossing paths");
    }
    if pair.meta.closing_arcs.len() != k {
        return VerifyOutcome::fail("one closing arc per cycle is required");
    }
    for (i, row) in pair.q.paths().iter().enumerate() {
        let (u, v) = pair.meta.closing_arcs[i];
        if *row.last().unwrap() != u || row[0] != v || !host.has_arc(u, v) {
            return VerifyOutcome::fail(format!("row {i} does not close into a cycle"));
        }
        if row.len() != 2 * k {
            return VerifyOutcome::fail(format!(
                "cycle {i} has length {}, wants {}",
                row.len(),
                2 * k
            ));
        }
    }
    for (j, col) in pair.p.paths().iter().enumerate() {
        if col.len() != k {
            return VerifyOutcome::fail(format!(
                "crossing path {j} has {} vertices, wants {k}",
                col.len()
            ));
        }
        for (i, row) in pair.q.paths().iter().enumerate() {
            let shared = col.iter().filter(|v| row.contains(v)).count();
            if shared != 1 {
                return VerifyOutcome::fail(format!(
                    "crossing path {j} shares {shared} vertices with cycle {i}"
                ));
            }
        }
        let first_row = pair.q.paths().iter().position(|r| r.contains(&col[0]));
        let last_row = pair
            .q
            .paths()
            .iter()
            .position(|r| r.contains(col.last().unwrap()));
        if !matches!((first_row, last_row), (Some(a), Some(b))
            if (a == 0 || a == k - 1) && (b == 0 || b == k - 1))
        {
            return VerifyOutcome::fail(format!(
                "crossing path {j} does not end on the outer cycles"
            ));
        }
        // Direction alternates.
        let expect: Vec<usize> = if j % 2 == 0 {
            (0..k).collect()
        } else {
            (0..k).rev().collect()
        };
        let seen: Vec<usize> = col
            .iter()
            .map(|v| pair.q.paths().iter().position(|r| r.contains(v)).unwrap())
            .collect();
        if seen != expect {
            return VerifyOutcome::fail(format!("crossing path {j} visits cycles out of order"));
        }
    }
    // Crossing paths appear in the same order around every cycle.
    for (i, row) in pair.q.paths().iter().enumerate() {
        let mut prev = None;
        for (j, col) in pair.p.paths().iter().enumerate() {
            let v = col.iter().find(|v| row.contains(v)).unwrap();
            let pos = position_of(row, *v);
            if let Some(p) = prev {
                if pos <= p {
                    return VerifyOutcome::fail(format!(
                        "crossing paths out of order around cycle {i} at path {j}"
                    ));
                }
            }
            prev = Some(pos);
        }
    }
    VerifyOutcome::pass()
}

fn verify_split(pair: &StructuredPair) -> VerifyOutcome {
    let pieces = pair.p.paths();
    let r = pieces.len();
    if r == 0 {
        return VerifyOutcome::fail("a split has at least one piece");
    }
    if pair.meta.cut_arcs.len() != r - 1 {
        return VerifyOutcome::fail("a split over r pieces carries r-1 cut arcs");
    }
    let Some(q_star) = &pair.meta.q_star else {
        return VerifyOutcome::fail("a split carries its reference linkage");
    };
    let star_arcs: BTreeSet<(u32, u32)> = q_star.arcs().collect();
    for (i, e) in pair.meta.cut_arcs.iter().enumerate() {
        if *pieces[i].last().unwrap() != e.0 || pieces[i + 1][0] != e.1 {
            return VerifyOutcome::fail(format!(
                "cut arc {i} does not join pieces {i} and {}",
                i + 1
            ));
        }
        if star_arcs.contains(e) {
            return VerifyOutcome::fail(format!("cut arc {i} belongs to the reference linkage"));
        }
    }
    // Along every q-path the piece labels appear in strictly reversed
    // grouped order, every piece intersecting.
    let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, piece) in pieces.iter().enumerate() {
        for &v in piece {
            owner.insert(v, i);
        }
    }
    for (qi, qp) in pair.q.paths().iter().enumerate() {
        let labels: Vec<usize> = qp.iter().filter_map(|v| owner.get(v).copied()).collect();
        if labels.windows(2).any(|w| w[0] < w[1]) {
            return VerifyOutcome::fail(format!("pieces out of reverse order along path {qi}"));
        }
        let seen: BTreeSet<usize> = labels.iter().copied().collect();
        if seen.len() != r {
            return VerifyOutcome::fail(format!("path {qi} misses a piece"));
        }
    }
    VerifyOutcome::pass()
}

fn verify_segmentation(pair: &StructuredPair, ordered: bool) -> VerifyOutcome {
    let Some(q_star) = &pair.meta.q_star else {
        return VerifyOutcome::fail("a segmentation carries its reference linkage");
    };
    let star_arcs: BTreeSet<(u32, u32)> = q_star.arcs().collect();
    let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (j, qp) in pair.q.paths().iter().enumerate() {
        for &v in qp {
            owner.insert(v, j);
        }
    }
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(pair.p.order());
    for (pi, pp) in pair.p.paths().iter().enumerate() {
        let labels: Vec<Option<usize>> = pp.iter().map(|v| owner.get(v).copied()).collect();
        // Grouped: once a label block ends, the label never reappears.
        let mut order = Vec::new();
        let mut last: Option<usize> = None;
        for l in labels.iter().flatten() {
            if Some(*l) != last {
                if order.contains(l) {
                    return VerifyOutcome::fail(format!(
                        "path {pi} revisits a segment after leaving it"
                    ));
                }
                order.push(*l);
                last = Some(*l);
            }
        }
        // A cut arc outside the reference linkage between consecutive blocks.
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let last_a = pp
                .iter()
                .rposition(|v| owner.get(v) == Some(&a))
                .expect("block vertex present");
            let first_b = pp
                .iter()
                .position(|v| owner.get(v) == Some(&b))
                .expect("block vertex present");
            let cuttable =
                (last_a..first_b).any(|idx| !star_arcs.contains(&(pp[idx], pp[idx + 1])));
            if !cuttable {
                return VerifyOutcome::fail(format!(
                    "no cut arc outside the reference linkage between segments {a} and {b} on path {pi}"
                ));
            }
        }
        orders.push(order);
    }
    if ordered {
        let expect: Vec<usize> = if pair.meta.ordering.is_empty() {
            (0..pair.q.order()).collect()
        } else {
            pair.meta.ordering.clone()
        };
        for (pi, o) in orders.iter().enumerate() {
            // Present labels must follow the common ordering.
            let filtered: Vec<usize> = expect.iter().copied().filter(|l| o.contains(l)).collect();
            if *o != filtered {
                return VerifyOutcome::fail(format!(
                    "path {pi} orders segments differently from the common ordering"
                ));
            }
        }
    }
    VerifyOutcome::pass()
}

/// Groups the verticals of a semi-web by the set of horizontals they avoid;
/// dropping that common set from the horizontals yields a web. Minimality of
/// the horizontals with respect to the chosen verticals is re-verified.
pub fn semi_web_to_web(
    host: &Digraph,
    pair: &StructuredPair,
    q_target: usize,
) -> Result<StructuredPair> {
    let d = pair
        .meta
        .degree
        .ok_or_else(|| Error::InvalidInput("input must be a semi-web with a degree".into()))?;
    let check = verify_structure(host, pair);
    if !check.ok {
        return Err(Error::InvalidInput(format!(
            "input fails semi-web verification: {:?}",
            check.violated
        )));
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (qi, qp) in pair.q.paths().iter().enumerate() {
        let qset: BTreeSet<u32> = qp.iter().copied().collect();
        let avoided: Vec<usize> = pair
            .p
            .paths()
            .iter()
            .enumerate()
            .filter(|(_, pp)| !pp.iter().any(|v| qset.contains(v)))
            .map(|(i, _)| i)
            .collect();
        groups.entry(avoided).or_default().push(qi);
    }
    let (fingerprint, members) = groups
        .into_iter()
        .max_by_key(|(f, m)| (m.len(), usize::MAX - f.len()))
        .expect("at least one vertical");
    if members.len() < q_target {
        return Err(Error::NotFound(format!(
            "largest avoidance class has {} verticals, target {q_target}; the guarantee needs \
             q >= target * {} * {}^{}",
            members.len(),
            d,
            pair.p.order(),
            d
        )));
    }
    let avoided: BTreeSet<usize> = fingerprint.into_iter().collect();
    let kept: Vec<Vec<u32>> = pair
        .p
        .paths()
        .iter()
        .enumerate()
        .filter(|(i, _)| !avoided.contains(i))
        .map(|(_, p)| p.clone())
        .collect();
    let new_q: Vec<Vec<u32>> = members
        .iter()
        .take(q_target.max(members.len()))
        .map(|&i| pair.q.path(i).to_vec())
        .collect();
    let out = StructuredPair {
        kind: StructureKind::Web,
        p: Linkage::new(kept)?,
        q: Linkage::new(new_q)?,
        meta: StructureMeta {
            well_linked: pair.meta.well_linked,
            ..StructureMeta::default()
        },
    };
    let v = verify_structure(host, &out);
    if !v.ok {
        return Err(Error::Internal(format!(
            "web output fails verification: {:?}",
            v.violated
        )));
    }
    if out.p.order() < d {
        return Err(Error::Internal(
            "web keeps fewer horizontals than the degree".into(),
        ));
    }
    // Degree and minimality are preserved by dropping avoided horizontals.
    let qd = out.q.to_digraph(host.n());
    if !is_h_minimal(&out.p, &qd) {
        return Err(Error::Internal("horizontals lost minimality".into()));
    }
    Ok(out)
}

/// Pigeonholes the per-path segment orderings: returns `k` paths sharing one
/// ordering as an ordered segmentation.
pub fn extract_ordered_segmentation(
    host: &Digraph,
    pair: &StructuredPair,
    k: usize,
) -> Result<StructuredPair> {
    let check = verify_structure(host, pair);
    if !check.ok {
        return Err(Error::InvalidInput(format!(
            "input fails segmentation verification: {:?}",
            check.violated
        )));
    }
    let mut owner: BTreeMap<u32, usize> = BTreeMap::new();
    for (j, qp) in pair.q.paths().iter().enumerate() {
        for &v in qp {
            owner.insert(v, j);
        }
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (pi, pp) in pair.p.paths().iter().enumerate() {
        let mut order = Vec::new();
        let mut last = None;
        for l in pp.iter().filter_map(|v| owner.get(v)) {
            if Some(*l) != last {
                order.push(*l);
                last = Some(*l);
            }
        }
        groups.entry(order).or_default().push(pi);
    }
    let (ordering, members) = groups
        .into_iter()
        .max_by_key(|(_, m)| m.len())
        .expect("at least one path");
    if members.len() < k {
        return Err(Error::NotFound(format!(
            "largest ordering class has {} paths, target {k}; the guarantee needs p >= (k-1)q!+1",
            members.len()
        )));
    }
    let kept: Vec<Vec<u32>> = members
        .iter()
        .take(k)
        .map(|&i| pair.p.path(i).to_vec())
        .collect();
    let out = StructuredPair {
        kind: StructureKind::OrderedSegmentation,
        p: Linkage::new(kept)?,
        q: pair.q.clone(),
        meta: StructureMeta {
            q_star: pair.meta.q_star.clone(),
            ordering,
            well_linked: pair.meta.well_linked,
            ..StructureMeta::default()
        },
    };
    let v = verify_structure(host, &out);
    if !v.ok {
        return Err(Error::Internal(format!(
            "ordered segmentation fails verification: {:?}",
            v.violated
        )));
    }
    Ok(out)
}

/// Stitches consecutive piece pairs of a `(2p, q)`-split into `p` folded
/// verticals: the result is a folded ordered `(q, p)`-web whose horizontals
/// are the split's q-side.
pub fn split_to_folded_web(host: &Digraph, pair: &StructuredPair) -> Result<StructuredPair> {
    let check = verify_structure(host, pair);
    if !check.ok {
        return Err(Error::InvalidInput(format!(
            "input fails split verification: {:?}",
            check.violated
        )));
    }
    let pieces = pair.p.paths();
    if !pieces.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(
            "a foldable split has an even number of pieces".into(),
        ));
    }
    let p_half = pieces.len() / 2;
    let mut verticals = Vec::with_capacity(p_half);
    let mut folds = Vec::with_capacity(p_half);
    for i in 0..p_half {
        let first = &pieces[2 * i];
        let second = &pieces[2 * i + 1];
        let mut joined = first.clone();
        joined.extend_from_slice(second);
        folds.push(first.len() - 1);
        verticals.push(joined);
    }
    // Reverse so the ordered-web ordering matches each horizontal's
    // traversal: the split lists pieces in reverse crossing order.
    verticals.reverse();
    folds.reverse();
    // The split's well-linkedness claim concerns its q-side, which becomes
    // the web's horizontals; the web flag would assert the verticals, so it
    // does not carry over.
    let out = StructuredPair {
        kind: StructureKind::FoldedOrderedWeb,
        p: pair.q.clone(),
        q: Linkage::new(verticals)?,
        meta: StructureMeta {
            fold_splits: folds,
            ..StructureMeta::default()
        },
    };
    let v = verify_structure(host, &out);
    if !v.ok {
        return Err(Error::Internal(format!(
            "folded ordered web fails verification: {:?}",
            v.violated
        )));
    }
    Ok(out)
}
