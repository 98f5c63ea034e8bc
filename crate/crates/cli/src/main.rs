//! Command-line entry point: generators, verifiers, extraction operations,
//! the bound registry and the duality experiment harness.
//!
//! Exit codes: 0 success / verified-true, 1 verification-false or not-found,
//! 2 usage error, 3 cap or budget exceeded.

use std::collections::BTreeSet;
use std::process::ExitCode;

use duality_core::bounds::{check_recurrence_asymptotics, eval_bound, Mode, RecurrenceBases};
use duality_core::digraph::{build_family, Family};
use duality_core::error::Error;
use duality_core::extract::{
    path_or_clique_routing, pk_routing_unilateral, strong_temporal_routing, PathOrClique,
};
use duality_core::gridweb::{
    extract_ordered_segmentation, generate_canonical, semi_web_to_web, split_to_folded_web,
    verify_structure, StructureKind, StructuredPair,
};
use duality_core::io;
use duality_core::linkage::menger;
use duality_core::pathsystem::verify_path_system;
use duality_core::pos::verify_path_of_sets;
use duality_core::solver::{
    max_disjoint_cycles, min_fvs, run_experiment, ExperimentConfig, ExperimentGen,
};
use duality_core::temporal::{check_h_routing, Host};
use duality_core::Result;

const USAGE: &str = "usage:
  duality gen <kind> <params…> [--out FILE]
      kinds: path bidirected-path cycle bidirected-clique bidirected-star
             transitive-tournament (emit .dg)
             cylindrical-grid fence acyclic-grid (emit .st)
  duality verify digraph FILE.dg
  duality verify structure FILE.st
  duality verify pos FILE.pos
  duality verify path-system FILE.ps
  duality verify routing HOST.dg FILE.rt
  duality verify routing-temporal HOST.tdg FILE.rt
  duality extract menger HOST.dg A-ids B-ids        (ids comma-separated)
  duality extract pk-routing HOST.tdg K
  duality extract strong-routing HOST.tdg K
  duality extract path-or-clique HOST.dg K P
  duality extract semi-web-to-web FILE.st Q-TARGET
  duality extract ordered-segmentation FILE.st K
  duality extract split-to-folded-web FILE.st
  duality extract cycle-packing FILE.dg
  duality extract fvs FILE.dg
  duality bounds <name> <args…> [--tower] [--base r=V,q=V,q'=V]
  duality bounds check-recurrence <r|q> <k…> --lo N/D --hi N/D
  duality experiment --gen G --n LIST --count C --seed S --out FILE.csv [--timing]
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotFound(_) | Error::GuaranteeUnavailable(_) => ExitCode::from(1),
                Error::CapExceeded(_)
                | Error::BudgetExhausted(_)
                | Error::DigitBudgetExceeded(_) => ExitCode::from(3),
                Error::InvalidParameter(_) | Error::Parse(_) | Error::UnknownBound(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

fn usage(msg: &str) -> Error {
    Error::InvalidParameter(format!("{msg}\n{USAGE}"))
}

fn dispatch(args: &[String]) -> Result<ExitCode> {
    let mut it = args.iter().map(String::as_str);
    match it.next() {
        Some("gen") => gen(&args[1..]),
        Some("verify") => verify(&args[1..]),
        Some("extract") => extract(&args[1..]),
        Some("bounds") => bounds(&args[1..]),
        Some("experiment") => experiment(&args[1..]),
        _ => Err(usage("missing or unknown subcommand")),
    }
}

fn out_flag(args: &[String]) -> (Vec<String>, Option<String>) {
    let mut rest = Vec::new();
    let mut out = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--out" && i + 1 < args.len() {
            out = Some(args[i + 1].clone());
            i += 2;
        } else {
            rest.push(args[i].clone());
            i += 1;
        }
    }
    (rest, out)
}

fn emit(content: &str, out: Option<String>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn gen(args: &[String]) -> Result<ExitCode> {
    let (rest, out) = out_flag(args);
    let kind = rest.first().ok_or_else(|| usage("gen needs a kind"))?;
    let params: Vec<usize> = rest[1..]
        .iter()
        .map(|t| {
            t.parse()
                .map_err(|_| usage("gen parameters must be positive integers"))
        })
        .collect::<Result<_>>()?;
    if let Ok(fam) = Family::parse(kind) {
        let k = *params
            .first()
            .ok_or_else(|| usage("family generators take a size"))?;
        let d = build_family(fam, k)?;
        emit(&io::format_digraph(&d), out)?;
        return Ok(ExitCode::SUCCESS);
    }
    let kind = StructureKind::parse(kind)?;
    let (_, pair) = generate_canonical(kind, &params)?;
    emit(&io::format_structure(&pair), out)?;
    Ok(ExitCode::SUCCESS)
}

/// The host digraph implied by a structured pair: the union of its paths,
/// closing arcs and reference linkage.
fn structure_host(pair: &StructuredPair) -> duality_core::digraph::Digraph {
    let mut arcs: Vec<(u32, u32)> = pair.p.arcs().chain(pair.q.arcs()).collect();
    arcs.extend(pair.meta.closing_arcs.iter().copied());
    arcs.extend(pair.meta.cut_arcs.iter().copied());
    if let Some(qs) = &pair.meta.q_star {
        arcs.extend(qs.arcs());
    }
    let n = arcs
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .max()
        .map_or(0, |m| m as usize + 1);
    duality_core::digraph::Digraph::new(n, arcs)
}

fn verify(args: &[String]) -> Result<ExitCode> {
    let kind = args.first().ok_or_else(|| usage("verify needs a kind"))?;
    let ok = match kind.as_str() {
        "digraph" => {
            let text =
                std::fs::read_to_string(args.get(1).ok_or_else(|| usage("verify needs a file"))?)?;
            io::parse_digraph(&text)?;
            println!("digraph: ok");
            true
        }
        "structure" => {
            let text =
                std::fs::read_to_string(args.get(1).ok_or_else(|| usage("verify needs a file"))?)?;
            let pair = io::parse_structure(&text)?;
            let host = structure_host(&pair);
            let outcome = verify_structure(&host, &pair);
            match &outcome.violated {
                Some(v) => println!("{}: violated: {v}", pair.kind.name()),
                None => println!("{}: ok", pair.kind.name()),
            }
            outcome.ok
        }
        "pos" => {
            let text =
                std::fs::read_to_string(args.get(1).ok_or_else(|| usage("verify needs a file"))?)?;
            let pos = io::parse_pos(&text)?;
            let outcome = verify_path_of_sets(&pos)?;
            match &outcome.violated {
                Some(v) => println!("pos: violated: {v}"),
                None => println!("pos: ok"),
            }
            outcome.ok
        }
        "path-system" => {
            let text =
                std::fs::read_to_string(args.get(1).ok_or_else(|| usage("verify needs a file"))?)?;
            let ps = io::parse_path_system(&text)?;
            let host = ps.to_digraph(
                ps.paths
                    .iter()
                    .flatten()
                    .chain(ps.links.values().flat_map(|l| l.paths().iter().flatten()))
                    .map(|&v| v as usize + 1)
                    .max()
                    .unwrap_or(0),
            );
            let report = verify_path_system(&host, &ps);
            println!(
                "path-system: valid={} clean={} ell={} p={}",
                report.valid, report.clean, report.ell, report.p
            );
            report.valid
        }
        "routing" => {
            let host = io::parse_digraph(&std::fs::read_to_string(
                args.get(1)
                    .ok_or_else(|| usage("verify routing needs a host"))?,
            )?)?;
            let routing = io::parse_routing(&std::fs::read_to_string(
                args.get(2)
                    .ok_or_else(|| usage("verify routing needs a routing file"))?,
            )?)?;
            let check = check_h_routing(Host::Static(&host), &routing)?;
            println!("routing: {}", if check.ok { "ok" } else { "fails" });
            check.ok
        }
        "routing-temporal" => {
            let host = io::parse_temporal(&std::fs::read_to_string(
                args.get(1)
                    .ok_or_else(|| usage("verify routing needs a host"))?,
            )?)?;
            let routing = io::parse_routing(&std::fs::read_to_string(
                args.get(2)
                    .ok_or_else(|| usage("verify routing needs a routing file"))?,
            )?)?;
            let check = check_h_routing(Host::Temporal(&host), &routing)?;
            println!("routing: {}", if check.ok { "ok" } else { "fails" });
            check.ok
        }
        other => return Err(usage(&format!("unknown verify kind {other:?}"))),
    };
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_id_list(s: &str) -> Result<BTreeSet<u32>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| usage("ids must be comma-separated integers"))
        })
        .collect()
}

fn extract(args: &[String]) -> Result<ExitCode> {
    let op = args
        .first()
        .ok_or_else(|| usage("extract needs an operation"))?;
    match op.as_str() {
        "menger" => {
            let host = io::parse_digraph(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("menger needs a host"))?,
            )?)?;
            let a = parse_id_list(args.get(2).ok_or_else(|| usage("menger needs A"))?)?;
            let b = parse_id_list(args.get(3).ok_or_else(|| usage("menger needs B"))?)?;
            let (l, sep) = menger(&host, &a, &b);
            println!("order {}", l.order());
            print!("{}", io::format_linkage(&l));
            let words: Vec<String> = sep.vertices.iter().map(|v| v.to_string()).collect();
            println!("separator {}", words.join(" "));
        }
        "pk-routing" => {
            let host = io::parse_temporal(&std::fs::read_to_string(
                args.get(1)
                    .ok_or_else(|| usage("pk-routing needs a host"))?,
            )?)?;
            let k: usize = args
                .get(2)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("pk-routing needs k"))?;
            let (_, routing) = pk_routing_unilateral(&host, k)?;
            print!("{}", io::format_routing(&routing));
        }
        "strong-routing" => {
            let host = io::parse_temporal(&std::fs::read_to_string(
                args.get(1)
                    .ok_or_else(|| usage("strong-routing needs a host"))?,
            )?)?;
            let k: usize = args
                .get(2)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("strong-routing needs k"))?;
            let all: BTreeSet<u32> = (0..host.n() as u32).collect();
            let out = strong_temporal_routing(&host, &all, k)?;
            print!("{}", io::format_routing(&out.routing));
        }
        "path-or-clique" => {
            let host = io::parse_digraph(&std::fs::read_to_string(
                args.get(1)
                    .ok_or_else(|| usage("path-or-clique needs a host"))?,
            )?)?;
            let k: usize = args
                .get(2)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("needs k"))?;
            let p: usize = args
                .get(3)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("needs p"))?;
            match path_or_clique_routing(&host, k, p)? {
                PathOrClique::Path(w) => {
                    let words: Vec<String> = w.0.iter().map(|v| v.to_string()).collect();
                    println!("path {}", words.join(" "));
                }
                PathOrClique::CliqueRouting(r) => print!("{}", io::format_routing(&r)),
            }
        }
        "semi-web-to-web" => {
            let pair = io::parse_structure(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("needs a .st file"))?,
            )?)?;
            let q: usize = args
                .get(2)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("needs a vertical target"))?;
            let host = structure_host(&pair);
            let web = semi_web_to_web(&host, &pair, q)?;
            print!("{}", io::format_structure(&web));
        }
        "ordered-segmentation" => {
            let pair = io::parse_structure(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("needs a .st file"))?,
            )?)?;
            let k: usize = args
                .get(2)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| usage("needs k"))?;
            let host = structure_host(&pair);
            let ordered = extract_ordered_segmentation(&host, &pair, k)?;
            print!("{}", io::format_structure(&ordered));
        }
        "split-to-folded-web" => {
            let pair = io::parse_structure(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("needs a .st file"))?,
            )?)?;
            let host = structure_host(&pair);
            let folded = split_to_folded_web(&host, &pair)?;
            print!("{}", io::format_structure(&folded));
        }
        "cycle-packing" => {
            let host = io::parse_digraph(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("needs a .dg file"))?,
            )?)?;
            let (nu, cycles) = max_disjoint_cycles(&host)?;
            println!("nu {nu}");
            for c in cycles {
                let words: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                println!("cycle {}", words.join(" "));
            }
        }
        "fvs" => {
            let host = io::parse_digraph(&std::fs::read_to_string(
                args.get(1).ok_or_else(|| usage("needs a .dg file"))?,
            )?)?;
            let (tau, fvs) = min_fvs(&host)?;
            println!("tau {tau}");
            let words: Vec<String> = fvs.iter().map(|v| v.to_string()).collect();
            println!("set {}", words.join(" "));
        }
        other => return Err(usage(&format!("unknown extract operation {other:?}"))),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_bases(spec: &str) -> Result<RecurrenceBases> {
    let mut bases = RecurrenceBases::default();
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| usage("--base takes r=V,q=V,q'=V entries"))?;
        let v: u64 = value
            .parse()
            .map_err(|_| usage("base values must be integers"))?;
        match key {
            "r" => bases.r1 = v,
            "q" => bases.q1 = v,
            "q'" => bases.qp1 = v,
            other => return Err(usage(&format!("unknown base {other:?}"))),
        }
    }
    Ok(bases)
}

fn parse_fraction(s: &str) -> Result<(u64, u64)> {
    match s.split_once('/') {
        Some((n, d)) => Ok((
            n.parse().map_err(|_| usage("fractions are N/D"))?,
            d.parse().map_err(|_| usage("fractions are N/D"))?,
        )),
        None => Ok((s.parse().map_err(|_| usage("fractions are N/D"))?, 1)),
    }
}

fn bounds(args: &[String]) -> Result<ExitCode> {
    let name = args.first().ok_or_else(|| usage("bounds needs a name"))?;
    if name == "check-recurrence" {
        let which = args
            .get(1)
            .ok_or_else(|| usage("check-recurrence needs r or q"))?;
        let mut ks = Vec::new();
        let mut lo = (1u64, 1u64);
        let mut hi = (u64::MAX / 2, 1);
        let mut i = 2;
        while i < args.len() {
            match args[i].as_str() {
                "--lo" => {
                    lo = parse_fraction(
                        args.get(i + 1).ok_or_else(|| usage("--lo needs a value"))?,
                    )?;
                    i += 2;
                }
                "--hi" => {
                    hi = parse_fraction(
                        args.get(i + 1).ok_or_else(|| usage("--hi needs a value"))?,
                    )?;
                    i += 2;
                }
                t => {
                    ks.push(
                        t.parse::<u64>()
                            .map_err(|_| usage("k values must be integers"))?,
                    );
                    i += 1;
                }
            }
        }
        let name = match which.as_str() {
            "r" => "rrst-r",
            "q" => "rrst-q",
            "q'" => "rrst-qprime",
            other => return Err(usage(&format!("unknown recurrence {other:?}"))),
        };
        check_recurrence_asymptotics(name, &ks, lo, hi, RecurrenceBases::default())?;
        println!("within band");
        return Ok(ExitCode::SUCCESS);
    }
    let mut mode = Mode::Exact;
    let mut bases = RecurrenceBases::default();
    let mut numeric: Vec<u64> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--tower" => {
                mode = Mode::Tower;
                i += 1;
            }
            "--base" => {
                bases = parse_bases(
                    args.get(i + 1)
                        .ok_or_else(|| usage("--base needs a value"))?,
                )?;
                i += 2;
            }
            t => {
                numeric.push(
                    t.parse()
                        .map_err(|_| usage("bound arguments must be integers"))?,
                );
                i += 1;
            }
        }
    }
    let value = eval_bound(name, &numeric, mode, bases)?;
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: &[String]) -> Result<ExitCode> {
    let mut gen = None;
    let mut sizes: Vec<usize> = Vec::new();
    let mut count = 1usize;
    let mut seed = 0u64;
    let mut out = None;
    let mut timing = false;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--gen" => {
                gen = Some(ExperimentGen::parse(
                    args.get(i + 1)
                        .ok_or_else(|| usage("--gen needs a value"))?,
                )?);
                i += 2;
            }
            "--n" => {
                sizes = args
                    .get(i + 1)
                    .ok_or_else(|| usage("--n needs a list"))?
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| usage("--n takes integers")))
                    .collect::<Result<_>>()?;
                i += 2;
            }
            "--count" => {
                count = args
                    .get(i + 1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| usage("--count takes an integer"))?;
                i += 2;
            }
            "--seed" => {
                seed = args
                    .get(i + 1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| usage("--seed takes an integer"))?;
                i += 2;
            }
            "--out" => {
                out = Some(
                    args.get(i + 1)
                        .ok_or_else(|| usage("--out needs a path"))?
                        .clone(),
                );
                i += 2;
            }
            "--timing" => {
                timing = true;
                i += 1;
            }
            other => return Err(usage(&format!("unknown experiment flag {other:?}"))),
        }
    }
    let cfg = ExperimentConfig {
        gen: gen.ok_or_else(|| usage("experiment needs --gen"))?,
        sizes,
        count,
        seed,
        timing,
    };
    let csv = run_experiment(&cfg)?;
    emit(&csv, out)?;
    Ok(ExitCode::SUCCESS)
}
