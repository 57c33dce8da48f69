use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fqdist(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fqdist"));
    cmd.args(args).env_remove("FQDIST_CACHE_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = fqdist(args, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn verdicts(r: &Value) -> Vec<(String, String)> {
    r["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["theorem"].as_str().unwrap().to_string(), e["verdict"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn single_distance_path_of_405_embeds() {
    let r = report(&["embed-path", "--q", "9", "--d", "3", "--r", "1", "--len", "405", "--set", "full"]);
    assert_eq!(verdicts(&r), [("dfs-path-length".into(), "pass".into())]);
    let emb = r["payload"]["embedding"].as_array().unwrap();
    assert_eq!(emb.len(), 405);
    assert_eq!(emb[0], json!([[0, 0], [0, 0], [0, 0]]));
}

#[test]
fn spectrum_report_shape() {
    let r = report(&["spectrum", "--q", "3", "--d", "2"]);
    assert_eq!(r["config"]["command"], "spectrum");
    let p = r["payload"].as_array().unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(p[0]["n"], 9);
    assert!(verdicts(&r).iter().all(|(_, v)| v == "pass"));
    assert!(r.get("timing_ms").is_none());
}

#[test]
fn csv_eigenvalues() {
    let out = fqdist(&["spectrum", "--q", "3", "--d", "2", "--r", "1", "--eigenvalues", "--format", "csv"], &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,m,eigenvalue");
    assert_eq!(lines.len(), 10);
}

#[test]
fn constructions_and_incidence_files() {
    let r = report(&["construct", "--q", "3", "--d", "3", "--kind", "ikr"]);
    assert_eq!(verdicts(&r), [("ikr-construction".into(), "pass".into())]);
    assert_eq!(r["payload"]["x"].as_array().unwrap().len(), 9);

    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("points.json");
    let spheres = dir.path().join("spheres.json");
    std::fs::write(&points, "[[0, 1], [1, 0], [2, 2]]").unwrap();
    std::fs::write(&spheres, r#"[{"center": [0, 0], "radius": 1}, {"center": [1, 1], "radius": 2}]"#).unwrap();
    let r = report(&[
        "incidence",
        "--q",
        "3",
        "--d",
        "2",
        "--points",
        points.to_str().unwrap(),
        "--spheres",
        spheres.to_str().unwrap(),
    ]);
    // (0,1) and (1,0) lie on the unit sphere about 0; (2,2) - (1,1) has norm 2.
    assert_eq!(r["payload"]["incidences"], 3);
}

#[test]
fn audit_tallies_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, args) in [(&a, vec!["spectrum", "--q", "3", "--d", "3"]), (&b, vec!["probe-conjecture", "--q", "3", "--d", "3"])] {
        let mut args = args;
        args.extend(["--out", path.to_str().unwrap()]);
        assert!(fqdist(&args, &[]).status.success());
    }
    let r = report(&["audit", a.to_str().unwrap(), b.to_str().unwrap()]);
    let rows = r["payload"].as_array().unwrap();
    let probe = rows.iter().find(|row| row["theorem"] == "min-degree-conjecture").unwrap();
    assert_eq!(probe["vacuous"], 1);
    let spectrum = rows.iter().find(|row| row["theorem"] == "distance-graph-spectrum").unwrap();
    assert_eq!(spectrum["pass"], 2);

    let empty = report(&["audit"]);
    assert_eq!(empty["payload"], json!([]));
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["mixing", "--q", "5", "--d", "2", "--trials", "20", "--seed", "11", "--format", "csv"];
    let a = fqdist(&args, &[]);
    let b = fqdist(&args, &[]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 1 + 4 * 20);
}

#[test]
fn cache_directory_is_populated_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["peel", "--q", "5", "--d", "3", "--set", "random:60:2"];
    let cold = fqdist(&args, &[("FQDIST_CACHE_DIR", dir.path())]);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 4);
    assert!(dir.path().join("spectrum-q5-d3-r1.json").exists());
    let warm = fqdist(&args, &[("FQDIST_CACHE_DIR", dir.path())]);
    let none = fqdist(&args, &[]);
    assert_eq!(cold.stdout, warm.stdout);
    assert_eq!(cold.stdout, none.stdout);
}

#[test]
fn tree_embedding_on_a_host_file() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let host = dir.path().join("host.json");
    std::fs::write(&tree, r#"{"vertices": 3, "edges": [[0, 1, 0], [1, 2, 0]]}"#).unwrap();
    let edges: Vec<Value> = (0..8u32).flat_map(|u| (u + 1..8).map(move |v| json!([u, v, 0]))).collect();
    std::fs::write(&host, json!({"vertices": 8, "edges": edges}).to_string()).unwrap();
    let r = report(&["embed-tree", "--tree", tree.to_str().unwrap(), "--host", host.to_str().unwrap(), "--delta", "2"]);
    assert_eq!(verdicts(&r), [("colorful-tree-embedding".into(), "pass".into())]);
    assert_eq!(r["payload"]["embedding"], json!([0, 1, 2]));
}

#[test]
fn errors_exit_with_status_two() {
    let out = fqdist(&["spectrum", "--q", "4", "--d", "2"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = fqdist(&["construct", "--q", "3", "--d", "3", "--kind", "avoiding", "--k", "1", "--r", "1"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let out = fqdist(&["construct", "--q", "3", "--d", "3", "--kind", "saturating", "--k", "1", "--timing"], &[]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["timing_ms"].is_u64());
}
