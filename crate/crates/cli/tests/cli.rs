// Copyright 2026 The dp-apsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! End-to-end runs of the binary: outputs, formats and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dp-apsd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn generated(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let g = dir.join("g.gr");
    let t = dir.join("g.td");
    let n = n.to_string();
    let out = run(&[
        "gen", "--n", &n, "--k", "2", "--seed", "7", "--out", path_str(&g), "--td", path_str(&t),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (g, t)
}

#[test]
fn gen_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let (g, t) = generated(dir.path(), 20);
    let out = run(&["validate", "--graph", path_str(&g), "--td", path_str(&t)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("width 2"), "{text}");
}

#[test]
fn disabled_noise_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (g, t) = generated(dir.path(), 25);
    let exact = run(&["exact", "--graph", path_str(&g)]);
    let private = run(&[
        "private", "--graph", path_str(&g), "--td", path_str(&t), "--noise-mode", "disabled",
    ]);
    assert!(exact.status.success() && private.status.success());
    let a: Value = serde_json::from_slice(&exact.stdout).unwrap();
    let b: Value = serde_json::from_slice(&private.stdout).unwrap();
    let (a, b) = (a["distances"].as_array().unwrap(), b["distances"].as_array().unwrap());
    assert_eq!(a.len(), 25);
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.as_array().unwrap().iter().zip(rb.as_array().unwrap()) {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn private_is_seed_deterministic_and_csv_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let (g, _) = generated(dir.path(), 15);
    let args = ["private", "--graph", path_str(&g), "--seed", "11", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("u,v,distance"));
    assert_eq!(text.lines().count(), 1 + 15 * 14 / 2);
}

#[test]
fn baselines_and_sensitivity_run() {
    let dir = tempfile::tempdir().unwrap();
    let (g, t) = generated(dir.path(), 12);
    for kind in ["input", "output"] {
        let out = run(&["baseline", "--kind", kind, "--graph", path_str(&g)]);
        assert!(out.status.success(), "{kind}");
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["n"], 12);
    }
    let out = run(&["sensitivity", "--graph", path_str(&g), "--td", path_str(&t)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["delta"].as_f64().unwrap() >= 1.0);
    assert_eq!(v["per_edge"].as_array().unwrap().len(), 21);
}

#[test]
fn bench_writes_reproducible_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    let json = dir.path().join("s.json");
    for csv in [&csv1, &csv2] {
        let out = run(&[
            "bench", "--sizes", "16,24", "--trials", "2", "--mechanisms", "main,input,output",
            "--seed", "5", "--out", path_str(csv), "--json", path_str(&json),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&csv1).unwrap();
    assert_eq!(a, std::fs::read(&csv2).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 3 * 2 * 2);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(summary["toggles"]["noise_mode"].is_string());
    assert_eq!(summary["cells"].as_array().unwrap().len(), 6);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["private"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let (g, _) = generated(dir.path(), 10);
    let bad_hops = run(&["private", "--graph", path_str(&g), "--hop-budget", "0"]);
    assert_eq!(bad_hops.status.code(), Some(1));
    let bad_eps = run(&["private", "--graph", path_str(&g), "--epsilon", "-1"]);
    assert_eq!(bad_eps.status.code(), Some(1));
    let bad_c = run(&["private", "--graph", path_str(&g), "--noise-mode", "paper", "--c", "1"]);
    assert_eq!(bad_c.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "bad.gr", "p wgr 2 1\ne 1 1 3.0\n");
    let out = run(&["exact", "--graph", path_str(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let missing = dir.path().join("nope.gr");
    assert_eq!(run(&["exact", "--graph", path_str(&missing)]).status.code(), Some(2));

    let good = write(dir.path(), "p3.gr", "p wgr 3 2\ne 1 2 1.0\ne 2 3 2.0\n");
    let td = write(dir.path(), "bad.td", "s td 2 2 3\nb 1 1 2\nb 3 2 3\n1 2\n");
    let out = run(&["validate", "--graph", path_str(&good), "--td", path_str(&td)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_decomposition_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "p3.gr", "p wgr 3 2\ne 1 2 1.0\ne 2 3 2.0\n");
    // Bags {1,2} and {3}: edge 2-3 is uncovered.
    let td = write(dir.path(), "p3.td", "s td 2 2 3\nb 1 1 2\nb 2 3\n1 2\n");
    let out = run(&["validate", "--graph", path_str(&g), "--td", path_str(&td)]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["private", "--graph", path_str(&g), "--td", path_str(&td)]);
    assert_eq!(out.status.code(), Some(3));
    let ok = write(dir.path(), "ok.td", "s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n");
    let out = run(&["validate", "--graph", path_str(&g), "--td", path_str(&ok)]);
    assert_eq!(out.status.code(), Some(0));
}
