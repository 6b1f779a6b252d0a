use std::process::{Command, Output};

use eqcohom::ecw::{validate, EquivariantCW};
use eqcohom::grmod::GradedModule;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqcohom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn rp2_check_fails_at_aug() {
    let o = run(&["check", "example:rp2", "--max-degree", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("position aug: not exact at degree 2"));
}

#[test]
fn example2_check_passes_with_hx() {
    let hx = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/example2.hx.json");
    let o = run(&["check", "example:example2", "--max-degree", "12", "--hx", hx]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for line in ["condition iii: holds", "condition iv: holds", "condition v: holds", "i_necessary: holds"] {
        assert!(out.contains(line), "missing {line}");
    }
    assert!(out.contains("extended: no"));
}

#[test]
fn sigma_t_has_nonzero_tor1() {
    let o = run(&["tor", "example:sigma-t?n=2", "--max-degree", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("Tor_1")).unwrap().to_string();
    assert_eq!(line, "Tor_1 on [0, 10]: 4: Z");
}

#[test]
fn json_output_is_deterministic() {
    let a = run(&["check", "example:example4", "--format", "json"]);
    let b = run(&["check", "example:example4", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in ["positions", "tor", "conditions", "reliable_window"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn cohomology_json_round_trips() {
    let o = run(&["cohomology", "example:rp2", "--format", "json", "--max-degree", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let m: GradedModule = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m.window(), (0, 8));
    let again = serde_json::to_value(&m).unwrap();
    let first: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(again, first);
}

#[test]
fn example_output_validates_from_file() {
    let o = run(&["example", "example4"]);
    assert_eq!(o.status.code(), Some(0));
    let e = EquivariantCW::from_json_str(&stdout(&o)).unwrap();
    assert!(validate(&e).is_ok());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("y.json");
    std::fs::write(&path, stdout(&o)).unwrap();
    let v = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v), "ok: 18 cells, 24 entries\n");
}

#[test]
fn schema_errors_carry_pointers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"n": 1, "cells": [{"id": "a", "disc_dim": 0}, {"id": "b", "disc_dim": "x"}], "differential": []}"#,
    )
    .unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/cells/1/disc_dim"), "{}", stderr(&o));
}

#[test]
fn invariant_violations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deg.json");
    std::fs::write(
        &path,
        r#"{"n": 1, "cells": [{"id": "a", "disc_dim": 0, "V": []}, {"id": "b", "disc_dim": 1, "V": [[1]]}],
            "differential": [{"from": "a", "to": "b", "coeff": "t1"}]}"#,
    )
    .unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/differential/0/coeff"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(run(&["cohomology", "example:rp2", "--max-degree", "7"]).status.code(), Some(2));
    assert_eq!(run(&["cohomology", "example:rp2", "--max-degree", "2"]).status.code(), Some(2));
    assert_eq!(run(&["cohomology", "example:nope"]).status.code(), Some(2));
    assert_eq!(run(&["cohomology", "/nonexistent/file.json"]).status.code(), Some(2));
}

#[test]
fn ab_reports_definite_failures() {
    let o = run(&["ab", "example:s2xs2-double"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("position 2: not exact at degree 3 (defect Z/2)"));
    let ok = run(&["ab", "example:s2-rotation"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn example_lists_fixtures() {
    let o = run(&["example"]);
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(names.contains(&"sigma-t".to_string()));
    assert!(names.contains(&"example4".to_string()));
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("properties (seeds 3..23): ok"));
}
