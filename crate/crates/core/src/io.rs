//! Text formats: digraphs (.dg), linkages (.lk), temporal digraphs (.tdg),
//! routings (.rt), structured pairs (.st), paths of linked sets (.pos) and
//! path-systems (.ps). Writers emit a canonical form; parsing a canonical
//! file and re-writing it is bit-exact.

use std::collections::BTreeMap;

use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::gridweb::{StructureKind, StructureMeta, StructuredPair};
use crate::linkage::Linkage;
use crate::pathsystem::PathSystem;
use crate::pos::{Cluster, Flavor, PathOfSets};
use crate::temporal::{HRouting, Pattern, TemporalDigraph};

fn data_lines(input: &str) -> impl Iterator<Item = &str> {
    input
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_ids(s: &str) -> Result<Vec<u32>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad vertex id {t:?}")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// .dg

pub fn format_digraph(d: &Digraph) -> String {
    let mut out = format!("n {}\n", d.n());
    for (u, v) in d.arcs() {
        out.push_str(&format!("a {u} {v}\n"));
    }
    out
}

pub fn parse_digraph(input: &str) -> Result<Digraph> {
    let mut n: Option<usize> = None;
    let mut arcs = Vec::new();
    for line in data_lines(input) {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("n") => {
                let v = it
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse("n line needs a count".into()))?;
                n = Some(v);
            }
            Some("a") => {
                let u = it.next().and_then(|t| t.parse::<u32>().ok());
                let v = it.next().and_then(|t| t.parse::<u32>().ok());
                match (u, v) {
                    (Some(u), Some(v)) => arcs.push((u, v)),
                    _ => return Err(Error::Parse(format!("bad arc line {line:?}"))),
                }
            }
            _ => return Err(Error::Parse(format!("unexpected line {line:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::Parse("missing n line".into()))?;
    if arcs
        .iter()
        .any(|&(u, v)| u as usize >= n || v as usize >= n)
    {
        return Err(Error::Parse("arc endpoint out of range".into()));
    }
    Ok(Digraph::new(n, arcs))
}

// ---------------------------------------------------------------------------
// .lk

pub fn format_linkage(l: &Linkage) -> String {
    let mut out = String::new();
    for p in l.paths() {
        let words: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_linkage(input: &str) -> Result<Linkage> {
    let mut paths = Vec::new();
    for line in data_lines(input) {
        paths.push(parse_ids(line)?);
    }
    Linkage::new(paths)
}

// ---------------------------------------------------------------------------
// .tdg

pub fn format_temporal(t: &TemporalDigraph) -> String {
    let mut out = format!("tn {} {}\n", t.n(), t.lifetime());
    for tau in 1..=t.lifetime() {
        out.push_str(&format!("t {tau}\n"));
        for (u, v) in t.layer_arcs(tau) {
            out.push_str(&format!("a {u} {v}\n"));
        }
    }
    out
}

pub fn parse_temporal(input: &str) -> Result<TemporalDigraph> {
    let mut n: Option<usize> = None;
    let mut lifetime = 0usize;
    let mut layers: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut current = 0usize; // 1-based timestep arcs are being read into
    for line in data_lines(input) {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("tn") => {
                let nv = it.next().and_then(|t| t.parse::<usize>().ok());
                let lv = it.next().and_then(|t| t.parse::<usize>().ok());
                match (nv, lv) {
                    (Some(nv), Some(lv)) => {
                        n = Some(nv);
                        lifetime = lv;
                        layers = vec![Vec::new(); lv];
                    }
                    _ => return Err(Error::Parse("bad tn line".into())),
                }
            }
            Some("t") => {
                let idx = it
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse("bad t line".into()))?;
                if idx == 0 || idx > lifetime {
                    return Err(Error::Parse(format!("timestep {idx} out of range")));
                }
                current = idx;
            }
            Some("a") => {
                let u = it.next().and_then(|t| t.parse::<u32>().ok());
                let v = it.next().and_then(|t| t.parse::<u32>().ok());
                match (u, v) {
                    (Some(u), Some(v)) if current >= 1 => layers[current - 1].push((u, v)),
                    _ => return Err(Error::Parse(format!("bad arc line {line:?}"))),
                }
            }
            _ => return Err(Error::Parse(format!("unexpected line {line:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::Parse("missing tn line".into()))?;
    Ok(TemporalDigraph::new(n, layers))
}

// ---------------------------------------------------------------------------
// .rt

pub fn format_routing(r: &HRouting) -> String {
    let mut out = format!("pattern {} {}\n", r.pattern.name(), r.pattern.size());
    for (i, v) in r.map.iter().enumerate() {
        out.push_str(&format!("map {i} {v}\n"));
    }
    out
}

pub fn parse_routing(input: &str) -> Result<HRouting> {
    let mut pattern: Option<Pattern> = None;
    let mut map: BTreeMap<usize, u32> = BTreeMap::new();
    for line in data_lines(input) {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("pattern") => {
                let fam = it
                    .next()
                    .ok_or_else(|| Error::Parse("pattern needs a family".into()))?;
                let k = it
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse("pattern needs a size".into()))?;
                pattern = Some(Pattern::parse(fam, k)?);
            }
            Some("map") => {
                let i = it.next().and_then(|t| t.parse::<usize>().ok());
                let v = it.next().and_then(|t| t.parse::<u32>().ok());
                match (i, v) {
                    (Some(i), Some(v)) => {
                        map.insert(i, v);
                    }
                    _ => return Err(Error::Parse(format!("bad map line {line:?}"))),
                }
            }
            _ => return Err(Error::Parse(format!("unexpected line {line:?}"))),
        }
    }
    let pattern = pattern.ok_or_else(|| Error::Parse("missing pattern line".into()))?;
    let mut ordered = Vec::with_capacity(pattern.size());
    for i in 0..pattern.size() {
        ordered.push(
            *map.get(&i)
                .ok_or_else(|| Error::Parse(format!("missing map entry {i}")))?,
        );
    }
    HRouting::new(pattern, ordered)
}

// ---------------------------------------------------------------------------
// .st

pub fn format_structure(pair: &StructuredPair) -> String {
    let mut out = format!("kind {}", pair.kind.name());
    if let Some(d) = pair.meta.degree {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    out.push_str("P:\n");
    out.push_str(&format_linkage(&pair.p));
    out.push_str("Q:\n");
    out.push_str(&format_linkage(&pair.q));
    let mut meta_lines = Vec::new();
    for &(u, v) in &pair.meta.closing_arcs {
        meta_lines.push(format!("meta: closing {u} {v}"));
    }
    for &(u, v) in &pair.meta.cut_arcs {
        meta_lines.push(format!("meta: cut {u} {v}"));
    }
    if let Some(qs) = &pair.meta.q_star {
        for p in qs.paths() {
            let words: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            meta_lines.push(format!("meta: qstar {}", words.join(" ")));
        }
    }
    if !pair.meta.ordering.is_empty() {
        let words: Vec<String> = pair.meta.ordering.iter().map(|v| v.to_string()).collect();
        meta_lines.push(format!("meta: ordering {}", words.join(" ")));
    }
    if pair.meta.well_linked {
        meta_lines.push("meta: well-linked".into());
    }
    for s in &pair.meta.fold_splits {
        meta_lines.push(format!("meta: fold {s}"));
    }
    for l in meta_lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn parse_structure(input: &str) -> Result<StructuredPair> {
    let mut kind: Option<StructureKind> = None;
    let mut meta = StructureMeta::default();
    let mut p_lines: Vec<Vec<u32>> = Vec::new();
    let mut q_lines: Vec<Vec<u32>> = Vec::new();
    let mut qstar_lines: Vec<Vec<u32>> = Vec::new();
    let mut section = 0u8;
    for line in data_lines(input) {
        if let Some(rest) = line.strip_prefix("kind ") {
            let mut it = rest.split_whitespace();
            let name = it
                .next()
                .ok_or_else(|| Error::Parse("kind needs a tag".into()))?;
            kind = Some(StructureKind::parse(name)?);
            if let Some(extra) = it.next() {
                meta.degree = extra.parse::<usize>().ok();
            }
            continue;
        }
        if line == "P:" {
            section = 1;
            continue;
        }
        if line == "Q:" {
            section = 2;
            continue;
        }
        if let Some(rest) = line.strip_prefix("meta:") {
            let rest = rest.trim();
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("closing") => {
                    let ids = parse_ids(&rest["closing".len()..])?;
                    meta.closing_arcs.push((ids[0], ids[1]));
                }
                Some("cut") => {
                    let ids = parse_ids(&rest["cut".len()..])?;
                    meta.cut_arcs.push((ids[0], ids[1]));
                }
                Some("qstar") => {
                    qstar_lines.push(parse_ids(&rest["qstar".len()..])?);
                }
                Some("ordering") => {
                    meta.ordering = parse_ids(&rest["ordering".len()..])?
                        .into_iter()
                        .map(|v| v as usize)
                        .collect();
                }
                Some("well-linked") => meta.well_linked = true,
                Some("fold") => {
                    let ids = parse_ids(&rest["fold".len()..])?;
                    meta.fold_splits.push(ids[0] as usize);
                }
                other => return Err(Error::Parse(format!("unknown meta line {other:?}"))),
            }
            continue;
        }
        let ids = parse_ids(line)?;
        match section {
            1 => p_lines.push(ids),
            2 => q_lines.push(ids),
            _ => {
                return Err(Error::Parse(format!(
                    "path line outside a section: {line:?}"
                )))
            }
        }
    }
    if !qstar_lines.is_empty() {
        meta.q_star = Some(Linkage::new(qstar_lines)?);
    }
    Ok(StructuredPair {
        kind: kind.ok_or_else(|| Error::Parse("missing kind line".into()))?,
        p: Linkage::new(p_lines)?,
        q: Linkage::new(q_lines)?,
        meta,
    })
}

// ---------------------------------------------------------------------------
// .pos

pub fn format_pos(pos: &PathOfSets) -> String {
    let flavor = match pos.flavor {
        Flavor::OrderLinked(r) => format!("order-linked {r}"),
        Flavor::WellLinked => "well-linked".into(),
    };
    let mut out = format!("pos {flavor} {} {}", pos.width(), pos.length());
    if pos.uniform {
        out.push_str(" uniform");
    }
    if pos.strict {
        out.push_str(" strict");
    }
    out.push('\n');
    out.push_str(&format!("hostn {}\n", pos.n));
    for (i, c) in pos.clusters.iter().enumerate() {
        out.push_str(&format!("cluster {i}\n"));
        for &(u, v) in &c.sub.arcs {
            out.push_str(&format!("a {u} {v}\n"));
        }
        for &v in &c.sub.vertices {
            if !c.sub.arcs.iter().any(|&(a, b)| a == v || b == v) {
                out.push_str(&format!("v {v}\n"));
            }
        }
        let words: Vec<String> = c.a.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("A: {}\n", words.join(" ")));
        let words: Vec<String> = c.b.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("B: {}\n", words.join(" ")));
        if i < pos.links.len() {
            out.push_str(&format_linkage(&pos.links[i]));
        }
    }
    out
}

pub fn parse_pos(input: &str) -> Result<PathOfSets> {
    let mut flavor: Option<Flavor> = None;
    let mut uniform = false;
    let mut strict = false;
    let mut n: usize = 0;
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut links: Vec<Linkage> = Vec::new();
    type PendingCluster = (
        std::collections::BTreeSet<u32>,
        std::collections::BTreeSet<(u32, u32)>,
        Vec<u32>,
        Vec<u32>,
    );
    let mut cur: Option<PendingCluster> = None;
    let mut pending_link: Vec<Vec<u32>> = Vec::new();

    let flush_cluster = |cur: &mut Option<PendingCluster>, clusters: &mut Vec<Cluster>| {
        if let Some((vertices, arcs, a, b)) = cur.take() {
            clusters.push(Cluster {
                sub: crate::digraph::SubDigraph { vertices, arcs },
                a,
                b,
            });
        }
    };

    for line in data_lines(input) {
        if let Some(rest) = line.strip_prefix("pos ") {
            let words: Vec<&str> = rest.split_whitespace().collect();
            let idx;
            flavor = Some(match words.first() {
                Some(&"order-linked") => {
                    idx = 2;
                    Flavor::OrderLinked(
                        words
                            .get(1)
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::Parse("order-linked needs a degree".into()))?,
                    )
                }
                Some(&"well-linked") => {
                    idx = 1;
                    Flavor::WellLinked
                }
                other => return Err(Error::Parse(format!("unknown flavor {other:?}"))),
            });
            uniform = words[idx..].contains(&"uniform");
            strict = words[idx..].contains(&"strict");
            continue;
        }
        if let Some(rest) = line.strip_prefix("hostn ") {
            n = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse("bad hostn".into()))?;
            continue;
        }
        if line.starts_with("cluster ") {
            if cur.is_some() && !pending_link.is_empty() {
                links.push(Linkage::new(std::mem::take(&mut pending_link))?);
            }
            flush_cluster(&mut cur, &mut clusters);
            cur = Some(Default::default());
            continue;
        }
        if let Some(rest) = line.strip_prefix("a ") {
            let ids = parse_ids(rest)?;
            let c = cur
                .as_mut()
                .ok_or_else(|| Error::Parse("arc outside a cluster".into()))?;
            c.0.insert(ids[0]);
            c.0.insert(ids[1]);
            c.1.insert((ids[0], ids[1]));
            continue;
        }
        if let Some(rest) = line.strip_prefix("v ") {
            let ids = parse_ids(rest)?;
            let c = cur
                .as_mut()
                .ok_or_else(|| Error::Parse("vertex outside a cluster".into()))?;
            c.0.insert(ids[0]);
            continue;
        }
        if let Some(rest) = line.strip_prefix("A:") {
            let c = cur
                .as_mut()
                .ok_or_else(|| Error::Parse("A outside a cluster".into()))?;
            c.2 = parse_ids(rest)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix("B:") {
            let c = cur
                .as_mut()
                .ok_or_else(|| Error::Parse("B outside a cluster".into()))?;
            c.3 = parse_ids(rest)?;
            continue;
        }
        // Bare id line: a linkage path following the current cluster.
        pending_link.push(parse_ids(line)?);
    }
    if !pending_link.is_empty() {
        links.push(Linkage::new(pending_link)?);
    }
    flush_cluster(&mut cur, &mut clusters);
    Ok(PathOfSets {
        n,
        clusters,
        links,
        flavor: flavor.ok_or_else(|| Error::Parse("missing pos line".into()))?,
        uniform,
        strict,
    })
}

// ---------------------------------------------------------------------------
// .ps

pub fn format_path_system(s: &PathSystem) -> String {
    let mut out = format!("ps {} {}\n", s.ell, s.order());
    out.push_str("P:\n");
    for p in &s.paths {
        let words: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    for (&(i, j), l) in &s.links {
        out.push_str(&format!("L {i} {j}:\n"));
        out.push_str(&format_linkage(l));
    }
    for (i, a) in s.a_in.iter().enumerate() {
        let words: Vec<String> = a.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("Ain {i}: {}\n", words.join(" ")));
    }
    for (i, a) in s.a_out.iter().enumerate() {
        let words: Vec<String> = a.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("Aout {i}: {}\n", words.join(" ")));
    }
    out
}

pub fn parse_path_system(input: &str) -> Result<PathSystem> {
    let mut ell = None;
    let mut order = 0usize;
    let mut paths: Vec<Vec<u32>> = Vec::new();
    let mut links: BTreeMap<(usize, usize), Linkage> = BTreeMap::new();
    let mut a_in: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let mut a_out: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    #[derive(PartialEq)]
    enum Section {
        None,
        Paths,
        Link(usize, usize),
    }
    let mut section = Section::None;
    let mut pending: Vec<Vec<u32>> = Vec::new();
    let flush = |section: &Section,
                 pending: &mut Vec<Vec<u32>>,
                 paths: &mut Vec<Vec<u32>>,
                 links: &mut BTreeMap<(usize, usize), Linkage>|
     -> Result<()> {
        match section {
            Section::Paths => paths.append(pending),
            Section::Link(i, j) => {
                links.insert((*i, *j), Linkage::new(std::mem::take(pending))?);
            }
            Section::None => {}
        }
        Ok(())
    };
    for line in data_lines(input) {
        if let Some(rest) = line.strip_prefix("ps ") {
            let ids = parse_ids(rest)?;
            ell = Some(ids[0] as usize);
            order = ids[1] as usize;
            continue;
        }
        if line == "P:" {
            flush(&section, &mut pending, &mut paths, &mut links)?;
            section = Section::Paths;
            continue;
        }
        if let Some(rest) = line.strip_prefix("L ") {
            flush(&section, &mut pending, &mut paths, &mut links)?;
            let rest = rest.trim_end_matches(':');
            let ids = parse_ids(rest)?;
            section = Section::Link(ids[0] as usize, ids[1] as usize);
            continue;
        }
        if let Some(rest) = line.strip_prefix("Ain ") {
            flush(&section, &mut pending, &mut paths, &mut links)?;
            section = Section::None;
            let (idx, vals) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse("Ain needs a colon".into()))?;
            a_in.insert(
                idx.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad Ain index".into()))?,
                parse_ids(vals)?,
            );
            continue;
        }
        if let Some(rest) = line.strip_prefix("Aout ") {
            flush(&section, &mut pending, &mut paths, &mut links)?;
            section = Section::None;
            let (idx, vals) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse("Aout needs a colon".into()))?;
            a_out.insert(
                idx.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad Aout index".into()))?,
                parse_ids(vals)?,
            );
            continue;
        }
        pending.push(parse_ids(line)?);
    }
    flush(&section, &mut pending, &mut paths, &mut links)?;
    let ell = ell.ok_or_else(|| Error::Parse("missing ps line".into()))?;
    if paths.len() != order {
        return Err(Error::Parse(format!(
            "{} paths declared, {} found",
            order,
            paths.len()
        )));
    }
    let collect = |m: BTreeMap<usize, Vec<u32>>| -> Result<Vec<Vec<u32>>> {
        (0..order)
            .map(|i| {
                m.get(&i)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("missing terminals {i}")))
            })
            .collect()
    };
    Ok(PathSystem {
        ell,
        paths,
        links,
        a_in: collect(a_in)?,
        a_out: collect(a_out)?,
    })
}
