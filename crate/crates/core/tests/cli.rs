use std::path::PathBuf;
use std::process::{Command, Output};

const INSTANCES: [&str; 6] =
    ["z_halfline", "z_bad_rep", "dihedral_halfline", "grid_cross", "free_semi_nested", "free_crossing_pair"];

fn instance(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("instances").join(format!("{name}.json")).display().to_string()
}

fn minicube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minicube")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn dot_counts(dot: &str) -> (usize, usize) {
    let nodes = dot.lines().filter(|l| l.trim_start().starts_with('v') && l.contains(" [label=") && !l.contains(" -- ")).count();
    let edges = dot.lines().filter(|l| l.contains(" -- ")).count();
    (nodes, edges)
}

#[test]
fn every_shipped_instance_validates() {
    for name in INSTANCES {
        let o = minicube(&["validate", &instance(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["non_canonical"].as_array().map(Vec::len), Some(0), "{name}");
    }
}

#[test]
fn halfline_cubing_is_a_path() {
    let o = minicube(&["cubing", &instance("z_halfline"), "--format", "dot"]);
    assert_eq!(o.status.code(), Some(0));
    // 11 nested pairs give a path on 12 vertices.
    assert_eq!(dot_counts(&stdout(&o)), (12, 11));
}

#[test]
fn grid_cubing_is_a_square_grid() {
    let o = minicube(&["cubing", &instance("grid_cross"), "--order", "almost", "--format", "dot"]);
    assert_eq!(o.status.code(), Some(0));
    // Two chains of 11 pairs crossing each other: a 12 x 12 grid.
    assert_eq!(dot_counts(&stdout(&o)), (144, 2 * 12 * 11));
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        vec!["cubing", "--format", "dot"],
        vec!["compare", "--format", "json"],
        vec!["relations", "--format", "json"],
        vec!["analyze", "--format", "json"],
    ] {
        let mut full = args.clone();
        let path = instance("grid_cross");
        full.insert(1, &path);
        let first = minicube(&full);
        let second = minicube(&full);
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn compare_reports_isometric_embedding() {
    let o = minicube(&["compare", &instance("z_halfline"), "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("L = C, isometric"));

    let o = minicube(&["compare", &instance("free_semi_nested"), "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("L ⊂ C, isometric"));
}

#[test]
fn almost_order_needs_repair_on_bad_representative() {
    let o = minicube(&["cubing", &instance("z_bad_rep"), "--order", "almost"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repair"));

    let o = minicube(&["cubing", &instance("z_bad_rep"), "--order", "almost", "--repair"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn repair_moves_the_exception() {
    let o = minicube(&["repair", &instance("z_bad_rep"), "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("-> L_0"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"backend\": \"halfline\", ").unwrap();
    let o = minicube(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = minicube(&["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = minicube(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pocset_command_builds_the_cubing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "pairs 2\n0 2\n").unwrap();
    let o = minicube(&["pocset", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["vertices"], 3);
    assert_eq!(v["edges"], 2);

    std::fs::write(&path, "pairs 1\n0 1\n").unwrap();
    let o = minicube(&["pocset", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pair_cap_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_minicube"))
        .args(["cubing", &instance("grid_cross")])
        .env("MINICUBE_CAP_PAIRS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
