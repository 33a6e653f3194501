use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suffreduce"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

const EXAMPLE3: &str = "1,0.8,0.1\n0.8,1,0.3\n0.1,0.3,1\n";

#[test]
fn cov_of_two_votes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("votes.csv"), "1,1\n1,-1\n").unwrap();
    let out = run(dir.path(), &["cov", "votes.csv", "-o", "m.csv"]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(read_matrix(&dir.path().join("m.csv")), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

    std::fs::write(dir.path().join("one.csv"), "1,-1,0\n").unwrap();
    assert!(run(dir.path(), &["cov", "one.csv", "-o", "r1.csv"]).status.success());
    assert_eq!(
        read_matrix(&dir.path().join("r1.csv")),
        vec![vec![1.0, -1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]
    );

    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(run(dir.path(), &["cov", "empty.csv"]).status.code(), Some(2));
    std::fs::write(dir.path().join("ragged.csv"), "1,1\n1\n").unwrap();
    assert_eq!(run(dir.path(), &["cov", "ragged.csv"]).status.code(), Some(2));
    std::fs::write(dir.path().join("real.csv"), "0.5,1\n").unwrap();
    assert_eq!(run(dir.path(), &["cov", "real.csv"]).status.code(), Some(2));
    assert!(run(dir.path(), &["cov", "real.csv", "--general"]).status.success());
}

#[test]
fn cluster_example() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), EXAMPLE3).unwrap();
    let out = run(dir.path(), &["cluster", "x.csv", "--lambda", "0.6"]);
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("{1,2} {3}"));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("clusters.csv")).unwrap(),
        "1,1,0\n1,1,0\n0,0,1\n"
    );
    let d: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dendrogram.json")).unwrap()).unwrap();
    assert_eq!(d["leaves"], 3);
    assert_eq!(d["merges"].as_array().unwrap().len(), 2);

    // no λ: dendrogram only
    let dir2 = tempfile::tempdir().unwrap();
    std::fs::write(dir2.path().join("x.csv"), "2\n").unwrap();
    assert!(run(dir2.path(), &["cluster", "x.csv"]).status.success());
    assert!(dir2.path().join("dendrogram.json").exists());
    assert!(!dir2.path().join("clusters.csv").exists());

    std::fs::write(dir.path().join("asym.csv"), "1,0.5\n0.2,1\n").unwrap();
    assert_eq!(run(dir.path(), &["cluster", "asym.csv"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["cluster", "x.csv", "--lambda", "-1"]).status.code(), Some(2));
}

#[test]
fn threshold_modes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), EXAMPLE3).unwrap();
    assert!(run(dir.path(), &["threshold", "x.csv", "--lambda", "0.6", "-o", "t.csv"]).status.success());
    assert_eq!(
        read_matrix(&dir.path().join("t.csv")),
        vec![vec![1.0, 0.8, 0.0], vec![0.8, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
    );
    assert_eq!(run(dir.path(), &["threshold", "x.csv"]).status.code(), Some(2));
    assert!(run(dir.path(), &["threshold", "x.csv", "--mode", "slt-plus"]).status.success());
}

#[test]
fn solve_examples() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("id.csv"), "1,0\n0,1\n").unwrap();
    let out = run(dir.path(), &["solve", "id.csv", "--estimator", "glasso", "--lambda", "0"]);
    assert!(out.status.success(), "{out:?}");
    let m = read_matrix(&dir.path().join("estimate.csv"));
    assert!((m[0][0] - 1.0).abs() < 1e-8 && m[0][1] == 0.0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);

    std::fs::write(dir.path().join("d.csv"), "3,0\n0,1\n").unwrap();
    let out = run(
        dir.path(),
        &["solve", "d.csv", "--estimator", "fps", "--k", "1", "--lambda", "0", "-o", "f.csv"],
    );
    assert!(out.status.success(), "{out:?}");
    let m = read_matrix(&dir.path().join("f.csv"));
    assert!((m[0][0] - 1.0).abs() < 1e-7 && m[1][1].abs() < 1e-7);

    let big: String = (0..20)
        .map(|i| (0..20).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(dir.path().join("big.csv"), big).unwrap();
    let out = run(dir.path(), &["solve", "big.csv", "--estimator", "ising", "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(dir.path(), &["solve", "id.csv", "--estimator", "nope"]).status.code(), Some(2));
}

#[test]
fn decomposed_solve_matches() {
    let dir = tempfile::tempdir().unwrap();
    let x = "2,0.9,0.05,0\n0.9,2,0,0.02\n0.05,0,1.5,-0.7\n0,0.02,-0.7,1.5\n";
    std::fs::write(dir.path().join("x.csv"), x).unwrap();
    let args = ["solve", "x.csv", "--estimator", "glasso", "--lambda", "0.1"];
    assert!(run(dir.path(), &[&args[..], &["-o", "a.csv"]].concat()).status.success());
    let out = run(dir.path(), &[&args[..], &["-o", "b.csv", "--decompose", "on"]].concat());
    assert!(out.status.success(), "{out:?}");
    let a = read_matrix(&dir.path().join("a.csv"));
    let b = read_matrix(&dir.path().join("b.csv"));
    for (ra, rb) in a.iter().zip(&b) {
        for (u, v) in ra.iter().zip(rb) {
            assert!((u - v).abs() <= 1e-5);
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["blocks"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--suite", "all", "--seed", "0", "--sizes", "5,10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(s["trials"].as_u64().unwrap() > 0);
    assert!(s["failures"].as_array().unwrap().is_empty());
    assert!(s["worst"].is_object());

    assert_eq!(run(dir.path(), &["verify", "--suite", "corrupted", "--sizes", "5,8"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["verify", "--suite", ""]).status.code(), Some(2));
}

#[test]
fn bench_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bench", "--p", "50", "--blocks", "5"]);
    assert!(out.status.success(), "{out:?}");
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert_eq!(b["equal_within_1e5"], true);
    assert!(b["speedup"].as_f64().unwrap() > 0.0);

    let out = run(dir.path(), &["bench", "--p", "20", "--blocks", "1", "-o", "one.json"]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(run(dir.path(), &["bench", "--p", "0"]).status.code(), Some(2));
}
