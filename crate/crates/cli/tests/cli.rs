use std::path::Path;
use std::process::{Command, Output};

use plr::fixtures;
use plr::plr::{compute_coefficients, Cell, LeafPayload, PlrTree};

fn plr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plr"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_env(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

const EMPTY: &str = r#"{"bounds":[[0,0],[1,1]],"obstacles":[]}"#;

#[test]
fn build_depth_zero_is_seventy_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let env = write_env(dir.path(), "empty.json", EMPTY);
    let out = dir.path().join("t.plr");
    let o = plr(&[
        "build",
        "--env",
        s(&env),
        "--goal",
        "0,0",
        "--max-depth",
        "0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 70);
    assert!(stdout(&o).contains("bytes 70"));
}

#[test]
fn goal_inside_obstacle_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let env = write_env(
        dir.path(),
        "sq.json",
        r#"{"bounds":[[0,0],[1,1]],"obstacles":[[[0.4,0.4],[0.6,0.4],[0.6,0.6],[0.4,0.6]]]}"#,
    );
    let o = plr(&[
        "build",
        "--env",
        s(&env),
        "--goal",
        "0.5,0.5",
        "--out",
        s(&dir.path().join("t.plr")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn query_toy_tree_and_blocked_and_out_of_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let samples = vec![
        (vec![0.0, 0.0], 0.0),
        (vec![1.0, 0.0], 1.0),
        (vec![1.0, 1.0], std::f64::consts::SQRT_2),
    ];
    let toy = PlrTree::single_leaf(
        &Cell::unit(2),
        LeafPayload::Fitted(compute_coefficients(&samples).unwrap()),
    )
    .unwrap();
    let path = dir.path().join("toy.plr");
    std::fs::write(&path, toy.serialize()).unwrap();
    let o = plr(&["query", "--tree", s(&path), "--point", "1,1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1.41421356");

    let blocked = PlrTree::single_leaf(&Cell::unit(2), LeafPayload::Blocked).unwrap();
    let bpath = dir.path().join("blocked.plr");
    std::fs::write(&bpath, blocked.serialize()).unwrap();
    assert_eq!(
        stdout(&plr(&["query", "--tree", s(&bpath), "--point", "0.5,0.5"])).trim(),
        "inf"
    );

    assert_eq!(
        plr(&["query", "--tree", s(&path), "--point", "1.5,0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        plr(&["query", "--tree", s(&path), "--point", "-0.5,0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let env = write_env(dir.path(), "empty.json", EMPTY);
    let tree = dir.path().join("t.plr");
    let o = plr(&[
        "build",
        "--env",
        s(&env),
        "--goal",
        "0,0",
        "--threshold",
        "0",
        "--out",
        s(&tree),
    ]);
    assert!(o.status.success());
    let prefix = dir.path().join("report");
    let o = plr(&[
        "eval",
        "--tree",
        s(&tree),
        "--env",
        s(&env),
        "--goal",
        "0,0",
        "--grid",
        "64",
        "--out-prefix",
        s(&prefix),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(json["max_error"].as_f64().unwrap() <= 0.221);
    assert!(dir.path().join("report.csv").exists());
    let pgm = std::fs::read(dir.path().join("report.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    assert!(stdout(&o).starts_with("plr: max_error="));
}

#[test]
fn eval_compares_against_raw_prm() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("maze.json");
    std::fs::write(&env, fixtures::maze().to_json()).unwrap();
    let tree = dir.path().join("prm.plr");
    let common = [
        "--env",
        s(&env),
        "--goal",
        "0.1,0.1",
        "--prm-samples",
        "3000",
        "--seed",
        "7",
    ];
    let mut args = vec![
        "build",
        "--oracle",
        "prm",
        "--threshold",
        "0",
        "--out",
        s(&tree),
    ];
    args.extend(common);
    assert!(plr(&args).status.success());
    let prefix = dir.path().join("r");
    let mut args = vec![
        "eval",
        "--tree",
        s(&tree),
        "--grid",
        "64",
        "--out-prefix",
        s(&prefix),
        "--compare-raw-prm",
    ];
    args.extend(common);
    let o = plr(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(
        out.contains("plr: max_error=") && out.contains("raw_prm: max_error="),
        "{out}"
    );
    assert!(dir.path().join("r.raw_prm.json").exists());
}

#[test]
fn plan_statuses_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("door.json");
    std::fs::write(&problem, fixtures::single_door().to_json()).unwrap();
    let out = dir.path().join("result.json");
    let o = plr(&[
        "plan",
        "--problem",
        s(&problem),
        "--heuristic",
        "none",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("status solved"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"status\": \"solved\"") && !text.contains("elapsed"));

    let o = plr(&[
        "plan",
        "--problem",
        s(&problem),
        "--heuristic",
        "none",
        "--max-expansions",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("budget_exceeded"));

    let sealed = r#"{"environment":{"bounds":[[0,0],[1,1]],"obstacles":[[[0.6,0],[0.65,0],[0.65,0.4],[0.6,0.4]],[[0.65,0.35],[1,0.35],[1,0.4],[0.65,0.4]]]},
        "robots":[{"type":"disc","radius":0.05}],"starts":[[0.2,0.8]],"goals":[[0.8,0.15]],"grid":{"translation":0.05,"rotation":0.2}}"#;
    let sealed_path = write_env(dir.path(), "sealed.json", sealed);
    let trace = dir.path().join("trace.csv");
    let o = plr(&[
        "plan",
        "--problem",
        s(&sealed_path),
        "--heuristic",
        "none",
        "--out",
        s(&out),
        "--trace",
        s(&trace),
        "--record-elapsed",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("exhausted") && text.contains("elapsed_seconds"));
    assert!(std::fs::read_to_string(&trace).unwrap().lines().count() > 10);

    let colliding = sealed.replace("[0.2,0.8]", "[0.62,0.2]");
    let p = write_env(dir.path(), "bad.json", &colliding);
    assert_eq!(
        plr(&[
            "plan",
            "--problem",
            s(&p),
            "--heuristic",
            "none",
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(2)
    );
    // tree count must match robot count
    assert_eq!(
        plr(&[
            "plan",
            "--problem",
            s(&problem),
            "--heuristic",
            "a.plr,b.plr",
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(plr(&["build"]).status.code(), Some(1));
    assert_eq!(plr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        plr(&["query", "--tree", "x", "--point", "abc"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(plr(&["--help"]).status.code(), Some(0));
}
