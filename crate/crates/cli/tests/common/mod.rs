#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linkmoe::synthetic::{planted_two_regime, PlantedConfig};

pub fn linkmoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkmoe"))
        .args(args)
        .env_remove("LINKMOE_THREADS")
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr on failure.
pub fn ok(args: &[&str]) -> String {
    let out = linkmoe(args);
    assert!(
        out.status.success(),
        "linkmoe {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

/// Small hand-checkable dataset.
///
/// Training graph on 6 nodes: 0-1, 0-2, 1-2, 1-3, 2-3, 3-4 (node 5 isolated).
/// Test positives (0,3) and (2,4) have CN 2 and 1; shared test negatives
/// (0,4), (1,4), (0,5), (1,5) have CN 0, 1, 0, 0.
pub fn hand_fixture(dir: &Path) -> PathBuf {
    let d = dir.join("hand");
    std::fs::create_dir_all(&d).unwrap();
    let files = [
        ("graph.txt", "n=6\n"),
        ("train.txt", "0 1\n0 2\n1 2\n1 3\n2 3\n3 4\n"),
        ("valid.txt", "4 5\n"),
        ("valid_neg.txt", "SHARED\n2 5\n"),
        ("test.txt", "0 3\n2 4\n"),
        ("test_neg.txt", "SHARED\n0 4\n1 4\n0 5\n1 5\n"),
    ];
    for (name, text) in files {
        std::fs::write(d.join(name), text).unwrap();
    }
    d
}

pub fn planted_fixture(dir: &Path, seed: u64) -> PathBuf {
    let d = dir.join(format!("planted{seed}"));
    planted_two_regime(&PlantedConfig::default(), seed)
        .unwrap()
        .write_dir(&d)
        .unwrap();
    d
}

pub fn planted_experts(data: &Path) -> String {
    format!(
        "external:expert_a={},external:expert_b={}",
        s(&data.join("expert_a.scores")),
        s(&data.join("expert_b.scores"))
    )
}

/// `method,metric,value` rows of a report as (method, metric) -> value.
pub fn report_value(report: &str, method: &str, metric: &str) -> f64 {
    report
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| c[0] == method && c[1] == metric)
        .unwrap_or_else(|| panic!("no {method}/{metric} in\n{report}"))[2]
        .parse()
        .unwrap()
}
