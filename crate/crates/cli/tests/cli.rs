//! End-to-end runs of the `perigid` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn perigid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perigid"))
        .args(args)
        .env_remove("PERIGID_TOL_RANK")
        .env_remove("PERIGID_TOL_NEWTON")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = perigid(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend(["--out", path.to_str().unwrap()]);
    let out = perigid(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (args, m) in [
        (vec!["stressed"], 8),
        (vec!["simplex", "--dim", "4", "--variant", "base"], 10),
        (vec!["simplex", "--dim", "3", "--variant", "removed:2"], 8),
        (
            vec![
                "simplex",
                "--dim",
                "3",
                "--variant",
                "enhanced",
                "--regular",
            ],
            9,
        ),
    ] {
        let path = gen(dir.path(), "fw.json", &args);
        let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["edge_orbits"].as_array().unwrap().len(), m, "{args:?}");
    }
    let stdout = ok_json(&["gen", "stressed"]);
    assert_eq!(stdout["dimension"], 3);
}

#[test]
fn analyze_dof() {
    let dir = tempfile::tempdir().unwrap();
    for (args, dof) in [
        (vec!["stressed"], 2),
        (vec!["simplex", "--dim", "3", "--variant", "enhanced"], 0),
        (vec!["simplex", "--dim", "2", "--variant", "base"], 2),
    ] {
        let path = gen(dir.path(), "fw.json", &args);
        assert_eq!(ok_json(&["analyze", s(&path)])["dof"], dof, "{args:?}");
    }
}

#[test]
fn cone_rays_and_pair_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stressed = gen(dir.path(), "stressed.json", &["stressed"]);
    let pairs = dir.path().join("pairs.csv");
    let v = ok_json(&["cone", s(&stressed), "--pairs", s(&pairs)]);
    assert_eq!(v["rays"].as_array().unwrap().len(), 2);
    assert_eq!(v["radius"], 2);
    assert!(v.get("stable_radius").is_some());
    let csv = fs::read_to_string(&pairs).unwrap();
    assert!(csv.starts_with("orbit_a,orbit_b,shift_1,shift_2,shift_3,value\n"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for row in rows {
        let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(value > -1e-9, "{row}");
    }

    let base = gen(
        dir.path(),
        "base.json",
        &["simplex", "--dim", "3", "--variant", "base"],
    );
    assert_eq!(
        ok_json(&["cone", s(&base)])["rays"]
            .as_array()
            .unwrap()
            .len(),
        3
    );

    let rigid = gen(
        dir.path(),
        "rigid.json",
        &["simplex", "--dim", "3", "--variant", "enhanced"],
    );
    let out = perigid(&["cone", s(&rigid)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"rays\": []"));
}

#[test]
fn star_reports() {
    let dir = tempfile::tempdir().unwrap();
    let stressed = gen(dir.path(), "stressed.json", &["stressed"]);
    let v = ok_json(&["star", s(&stressed), "--orbit", "green"]);
    assert_eq!(v["num_vectors"], 8);
    assert!(v.get("pointed_codim2").is_some() && v.get("separating_normal").is_some());
    let mech = gen(
        dir.path(),
        "mech.json",
        &["simplex", "--dim", "2", "--variant", "removed:1"],
    );
    for orbit in ["red", "green"] {
        assert_eq!(
            ok_json(&["star", s(&mech), "--orbit", orbit])["lineality_dim"],
            0
        );
    }
    assert_eq!(
        perigid(&["star", s(&mech), "--orbit", "blue"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_expands_and_reverse_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let mech = gen(
        dir.path(),
        "mech.json",
        &["simplex", "--dim", "2", "--variant", "removed:1"],
    );
    let fwd = dir.path().join("fwd");
    let v = ok_json(&[
        "simulate",
        s(&mech),
        "--ray",
        "0",
        "--steps",
        "20",
        "--out",
        s(&fwd),
    ]);
    assert_eq!(v["audit_passed"], true);
    assert_eq!(v["steps"], 21);
    assert!(fwd.join("frame_0000.obj").exists() && fwd.join("frame_0020.obj").exists());
    let audit: Value =
        serde_json::from_str(&fs::read_to_string(fwd.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["passed"], true);
    let path: Value =
        serde_json::from_str(&fs::read_to_string(fwd.join("path.json")).unwrap()).unwrap();
    assert_eq!(path["facet_separation"].as_array().unwrap().len(), 21);

    let back = dir.path().join("back");
    let v = ok_json(&[
        "simulate",
        s(&mech),
        "--ray",
        "0",
        "--steps",
        "20",
        "--reverse",
        "--format",
        "csv",
        "--out",
        s(&back),
    ]);
    assert_eq!(v["audit_passed"], false);
    assert!(back.join("frames.csv").exists() && back.join("frame_edges.csv").exists());
    assert!(
        fs::read_to_string(back.join("audit.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );
}

#[test]
fn simulate_with_direction_file() {
    let dir = tempfile::tempdir().unwrap();
    let mech = gen(
        dir.path(),
        "mech.json",
        &["simplex", "--dim", "2", "--variant", "removed:2"],
    );
    let seed = dir.path().join("seed.json");
    fs::write(&seed, "[1.0]").unwrap();
    let a = ok_json(&[
        "simulate",
        s(&mech),
        "--direction",
        s(&seed),
        "--steps",
        "5",
        "--out",
        s(&dir.path().join("a")),
    ]);
    assert_eq!(a["steps"], 6);
    fs::write(&seed, "[1.0, 2.0, 3.0]").unwrap();
    let out = perigid(&[
        "simulate",
        s(&mech),
        "--direction",
        s(&seed),
        "--out",
        s(&dir.path().join("b")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigid_simulation_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let rigid = gen(
        dir.path(),
        "rigid.json",
        &["simplex", "--dim", "2", "--variant", "enhanced"],
    );
    let seed = dir.path().join("seed.json");
    fs::write(&seed, "[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]").unwrap();
    let out = perigid(&[
        "simulate",
        s(&rigid),
        "--direction",
        s(&seed),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a flex"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(perigid(&[]).status.code(), Some(2));
    assert_eq!(
        perigid(&["gen", "simplex", "--dim", "3", "--variant", "twisted"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        perigid(&["analyze", s(&dir.path().join("missing.json"))])
            .status
            .code(),
        Some(4)
    );
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"dimension\": 2}").unwrap();
    assert_eq!(perigid(&["analyze", s(&bad)]).status.code(), Some(2));
    let fw = gen(dir.path(), "fw.json", &["stressed"]);
    assert_eq!(
        perigid(&["cone", s(&fw), "--radius", "0"]).status.code(),
        Some(2)
    );
    let blocked = dir.path().join("fw.json").join("out.json");
    assert_eq!(
        perigid(&["analyze", s(&fw), "--out", s(&blocked)])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn tolerance_environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let fw = gen(dir.path(), "fw.json", &["stressed"]);
    let run = |var: &str, val: &str| {
        Command::new(env!("CARGO_BIN_EXE_perigid"))
            .args(["analyze", s(&fw)])
            .env(var, val)
            .output()
            .unwrap()
    };
    let out = run("PERIGID_TOL_RANK", "1e-6");
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tolerance"], 1e-6);
    assert_eq!(run("PERIGID_TOL_RANK", "-1").status.code(), Some(2));
    assert_eq!(run("PERIGID_TOL_NEWTON", "abc").status.code(), Some(2));

    let mech = gen(
        dir.path(),
        "mech.json",
        &["simplex", "--dim", "2", "--variant", "removed:1"],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_perigid"))
        .args([
            "simulate",
            s(&mech),
            "--ray",
            "0",
            "--h",
            "0.5",
            "--steps",
            "2",
            "--out",
            s(&dir.path().join("o")),
        ])
        .env("PERIGID_TOL_NEWTON", "1e-300")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let fw = gen(dir.path(), "fw.json", &["stressed"]);
    let collect = |tag: &str| {
        let out = dir.path().join(tag);
        let pairs = dir.path().join(format!("{tag}.csv"));
        let cone = perigid(&["cone", s(&fw), "--pairs", s(&pairs)]).stdout;
        let sim = perigid(&[
            "simulate",
            s(&fw),
            "--ray",
            "1",
            "--steps",
            "5",
            "--format",
            "csv",
            "--out",
            s(&out),
        ])
        .stdout;
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let contents: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
        (cone, fs::read(pairs).unwrap(), sim, contents)
    };
    assert_eq!(collect("a"), collect("b"));
}
