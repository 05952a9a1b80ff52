mod common;

use common::*;
use gbm::graph::Graph;
use gbm::io::{from_str, save, to_string, Model};
use gbm::library::{instantiate, ComponentKind, Options};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbm")).args(args).output().unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn write_model(dir: &Path, name: &str, g: Graph) -> String {
    let path = dir.join(name);
    save(&Model::Component(g), &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn test_systems_round_trip() {
    let mut systems = vec![conduction_graph(None), conduction_graph(Some(1.0)), exchange_pair(), advection(), radiator()];
    systems.extend(nonlinear_cases().into_iter().map(|c| c.graph));
    for g in systems {
        let model = Model::Component(g);
        assert_eq!(from_str(&to_string(&model)).unwrap(), model);
    }
}

#[test]
fn shipped_models_validate() {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(models_dir().join("catalog")).unwrap().map(|e| e.unwrap().path()).collect();
    paths.push(models_dir().join("tank_heat_load.model"));
    assert_eq!(paths.len(), ComponentKind::ALL.len() + 1);
    for p in paths {
        let out = gbm(&["validate", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
        assert!(text(&out).starts_with("ok:"));
    }
}

#[test]
fn catalog_files_match_the_library() {
    for kind in ComponentKind::ALL {
        let path = models_dir().join("catalog").join(format!("{kind}.model"));
        let loaded = gbm::io::load(&path).unwrap();
        let built = instantiate(kind, kind.as_str(), &Options::default()).unwrap();
        assert_eq!(loaded, Model::Component(built), "{kind}");
    }
}

#[test]
fn trajectory_columns_follow_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = instantiate(ComponentKind::HeatLoad, "hl", &Options::default()).unwrap();
    let path = write_model(dir.path(), "hl.model", g.clone());
    let out = gbm(&["simulate", &path, "--t-final", "1", "--dt", "0.1"]);
    assert!(out.status.success());
    let csv = text(&out);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + g.total_states() + g.inputs.len() + g.total_flow_entries());
    assert_eq!(header[0], "time");
    for name in g.state_names().iter().chain(&g.flow_names()) {
        assert!(header.contains(&name.as_str()), "missing column {name}");
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
}

#[test]
fn linearize_writes_the_scalar_advection_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(dir.path(), "adv.model", advection());
    let out = gbm(&["linearize", &path, "--x0", "300", "--u0", "0.2", "--d0", "350"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut values = std::collections::BTreeMap::new();
    for line in text(&out).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        values.insert(f[0].to_string(), f[3].parse::<f64>().unwrap());
    }
    assert!((values["A"] + 0.008).abs() <= 1e-12);
    assert!((values["B"] - 2.0).abs() <= 1e-12);
    assert!((values["Z"] - 2.4).abs() <= 1e-12);
}

#[test]
fn heat_load_drawing() {
    let out = gbm(&["draw", models_dir().join("catalog/heat_load.model").to_str().unwrap()]);
    let dot = text(&out);
    assert!(dot.starts_with("digraph \"heat_load\" {"));
    let nodes: Vec<&str> = dot.lines().filter(|l| l.contains("shape=circle") || l.contains("shape=doublecircle")).collect();
    assert_eq!(nodes.len(), 3);
    assert_eq!(nodes.iter().filter(|l| l.contains("style=dashed")).count(), 1);
    assert_eq!(dot.lines().filter(|l| l.contains(" -> ")).count(), 4);
}

#[test]
fn combine_output_is_a_valid_component() {
    let dir = tempfile::tempdir().unwrap();
    let combined = dir.path().join("combined.model");
    let out = gbm(&["combine", models_dir().join("tank_heat_load.model").to_str().unwrap(), "-o", combined.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = gbm::io::load_graph(&combined).unwrap();
    assert_eq!((g.vertices.len(), g.edges.len()), (4, 5));
    assert_eq!(g.inputs.len(), 3);
    assert!(gbm(&["validate", combined.to_str().unwrap()]).status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "{\"schema_version\": 1, \"component\": {\"name\": 3}}").unwrap();
    assert_eq!(gbm(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gbm(&["simulate"]).status.code(), Some(1));
    assert_eq!(gbm(&["report", "x", "--kind", "colour"]).status.code(), Some(1));
    assert_eq!(gbm(&["--version"]).status.code(), Some(0));
}

#[test]
fn optimize_is_reproducible() {
    let problem = models_dir().join("cold_loop_design.model");
    let run = || gbm(&["optimize", problem.to_str().unwrap(), "--seed", "5", "--budget", "16"]);
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let history = text(&a);
    assert_eq!(history.lines().count(), 17);
    let seq = gbm(&["optimize", problem.to_str().unwrap(), "--seed", "5", "--budget", "16", "--sequential"]);
    assert_eq!(seq.stdout, a.stdout);
}
