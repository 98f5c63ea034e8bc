//! End-to-end runs of the binary: formats, exit codes, determinism.

use std::process::Command;

fn duality(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_duality"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn gen_and_verify_round_trip() {
    let dir = std::env::temp_dir().join(format!("duality-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dg = dir.join("c5.dg");
    let (code, _, _) = duality(&["gen", "cycle", "5", "--out", dg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, out, _) = duality(&["verify", "digraph", dg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("ok"));

    let st = dir.join("grid.st");
    let (code, _, _) = duality(&[
        "gen",
        "cylindrical-grid",
        "2",
        "--out",
        st.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, out, _) = duality(&["verify", "structure", st.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    // Usage error: 2.
    let (code, _, _) = duality(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, _) = duality(&["bounds", "no-such-bound", "3"]);
    assert_eq!(code, 2);

    // Cap exceeded: 3.
    let dir = std::env::temp_dir().join(format!("duality-cli-caps-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let big = dir.join("big.dg");
    let (code, _, _) = duality(&["gen", "cycle", "30", "--out", big.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, err) = duality(&["extract", "fvs", big.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");

    // Digit budget: 3.
    let (code, _, _) = duality(&["bounds", "web-or-clique-ell", "3", "3", "3", "3"]);
    assert_eq!(code, 3);

    // Verification false: 1.
    let st = dir.join("broken.st");
    let (_, text, _) = duality(&["gen", "fence", "2", "2"]);
    // Claim the fence is a cylindrical grid: the verifier must reject.
    let broken = text.replace("kind fence", "kind cylindrical-grid");
    std::fs::write(&st, broken).unwrap();
    let (code, _, _) = duality(&["verify", "structure", st.to_str().unwrap()]);
    assert_eq!(code, 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bounds_surface() {
    let (code, out, _) = duality(&["bounds", "routing-star-n", "2", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "64");

    let (code, out, _) = duality(&["bounds", "younger-f", "2", "--tower"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("T(h="), "{out}");

    let (code, out, _) = duality(&["bounds", "rrst-r", "4", "--base", "r=5,q=1,q'=1"]);
    assert_eq!(code, 0);
    // r(2) = 8 (5 + 4) = 72; r(4) = 8 (72 + n(4)) = 8 (72 + 22) = 752.
    assert_eq!(out.trim(), "752");

    let (code, out, _) = duality(&[
        "bounds",
        "check-recurrence",
        "q",
        "8",
        "64",
        "--lo",
        "24",
        "--hi",
        "31",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("within band"));
}

#[test]
fn experiment_reproducible() {
    let dir = std::env::temp_dir().join(format!("duality-cli-exp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for f in [&a, &b] {
        let (code, _, err) = duality(&[
            "experiment",
            "--gen",
            "tournament",
            "--n",
            "4,5",
            "--count",
            "3",
            "--seed",
            "11",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let ca = std::fs::read(&a).unwrap();
    let cb = std::fs::read(&b).unwrap();
    assert_eq!(ca, cb);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn extract_surface() {
    let dir = std::env::temp_dir().join(format!("duality-cli-ext-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dg = dir.join("k4.dg");
    duality(&[
        "gen",
        "bidirected-clique",
        "4",
        "--out",
        dg.to_str().unwrap(),
    ]);
    let (code, out, _) = duality(&["extract", "menger", dg.to_str().unwrap(), "0,1", "2,3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("order 2"));
    let (code, out, _) = duality(&["extract", "cycle-packing", dg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.starts_with("nu 2"));
    let (code, out, _) = duality(&["extract", "path-or-clique", dg.to_str().unwrap(), "2", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("path ") || out.starts_with("pattern "));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn temporal_surface() {
    let dir = std::env::temp_dir().join(format!("duality-cli-tdg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    // A two-vertex temporal digraph with the arc repeated over 120 layers.
    let tdg = dir.join("tt.tdg");
    let mut text = String::from("tn 2 120\n");
    for t in 1..=120 {
        text.push_str(&format!("t {t}\na 0 1\n"));
    }
    std::fs::write(&tdg, text).unwrap();

    let (code, out, err) = duality(&["extract", "pk-routing", tdg.to_str().unwrap(), "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("pattern path 2"), "{out}");

    // The emitted routing verifies against the temporal host.
    let rt = dir.join("r.rt");
    std::fs::write(&rt, &out).unwrap();
    let (code, out, _) = duality(&[
        "verify",
        "routing-temporal",
        tdg.to_str().unwrap(),
        rt.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("ok"));

    // Strong routing needs strongly connected layers: rejected here (usage
    // class, exit 2 via invalid input).
    let (code, _, _) = duality(&["extract", "strong-routing", tdg.to_str().unwrap(), "2"]);
    assert_ne!(code, 0);

    // A bidirected pair of arcs over enough layers carries a strong routing.
    let tdg2 = dir.join("bi.tdg");
    let mut text = String::from("tn 2 12\n");
    for t in 1..=12 {
        text.push_str(&format!("t {t}\na 0 1\na 1 0\n"));
    }
    std::fs::write(&tdg2, text).unwrap();
    let (code, out, err) = duality(&["extract", "strong-routing", tdg2.to_str().unwrap(), "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("pattern "), "{out}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_pos_and_path_system_files() {
    let dir = std::env::temp_dir().join(format!("duality-cli-pos-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let (_, pools) = duality_core::pos::slice_grid_to_pools(2, 6, 2).unwrap();
    let pos_path = dir.join("pools.pos");
    std::fs::write(&pos_path, duality_core::io::format_pos(&pools)).unwrap();
    let (code, out, err) = duality(&["verify", "pos", pos_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("ok"));

    // A broken variant trips the verifier and exits 1.
    let mut broken = pools.clone();
    broken.clusters[0].a.swap(0, 1);
    broken.uniform = true; // the swapped ordering breaks uniformity
    let bad_path = dir.join("broken.pos");
    std::fs::write(&bad_path, duality_core::io::format_pos(&broken)).unwrap();
    let (code, _, _) = duality(&["verify", "pos", bad_path.to_str().unwrap()]);
    assert_eq!(code, 1);

    let ps_path = dir.join("sys.ps");
    let (_, sys) = fixtures_disjoint_system(2, 3);
    std::fs::write(&ps_path, duality_core::io::format_path_system(&sys)).unwrap();
    let (code, out, err) = duality(&["verify", "path-system", ps_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("valid=true"));
    assert!(out.contains("clean=true"));
    std::fs::remove_dir_all(&dir).ok();
}

/// Disjoint path-system fixture (mirrors the core test fixture).
fn fixtures_disjoint_system(
    ell: usize,
    p: usize,
) -> (
    duality_core::digraph::Digraph,
    duality_core::pathsystem::PathSystem,
) {
    use duality_core::linkage::Linkage;
    use std::collections::BTreeMap;
    let path_v = |i: usize, t: usize| (i * 2 * ell + t) as u32;
    let base = p * 2 * ell;
    let mut arcs = Vec::new();
    let mut paths = Vec::new();
    let mut a_in = Vec::new();
    let mut a_out = Vec::new();
    for i in 0..p {
        let path: Vec<u32> = (0..2 * ell).map(|t| path_v(i, t)).collect();
        arcs.extend(path.windows(2).map(|w| (w[0], w[1])));
        a_in.push(path[..ell].to_vec());
        a_out.push(path[ell..].to_vec());
        paths.push(path);
    }
    let mut links = BTreeMap::new();
    let mut fresh = base as u32;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let mut lp = Vec::with_capacity(ell);
            for t in 0..ell {
                let mid = fresh;
                fresh += 1;
                let from = path_v(i, ell + t);
                let to = path_v(j, t);
                arcs.push((from, mid));
                arcs.push((mid, to));
                lp.push(vec![from, mid, to]);
            }
            links.insert((i, j), Linkage::new(lp).unwrap());
        }
    }
    let host = duality_core::digraph::Digraph::new(fresh as usize, arcs);
    (
        host,
        duality_core::pathsystem::PathSystem {
            ell,
            paths,
            links,
            a_in,
            a_out,
        },
    )
}
