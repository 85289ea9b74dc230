use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiplex-nmf")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let output = cli(args);
    assert!(output.status.success(), "{args:?}: {}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Parses the two-line CSV printed by `evaluate` into name/value pairs.
fn scores(csv: &str) -> Vec<(String, f64)> {
    let mut lines = csv.lines();
    let names = lines.next().unwrap().split(',');
    let values = lines.next().unwrap().split(',').map(|v| v.parse().unwrap());
    names.map(str::to_owned).zip(values).collect()
}

fn score(csv: &str, name: &str) -> f64 {
    scores(csv).into_iter().find(|(n, _)| n == name).unwrap().1
}

fn planted(dir: &TempDir) -> (String, String) {
    let out = path(dir, "net");
    ok(&[
        "generate", "planted", "--sizes", "12,12,12", "--within", "0.8", "--between", "0.05", "--layer-count", "2",
        "--seed", "5", "--out", &out,
    ]);
    (path(dir, "net/layer1.tsv"), path(dir, "net/layer2.tsv"))
}

#[test]
fn generate_cluster_evaluate() {
    let dir = TempDir::new().unwrap();
    let (l1, l2) = planted(&dir);
    for method in ["csnmf", "cpnmf", "csnmtf", "cssnmtf", "merged-snmf"] {
        let out = path(&dir, method);
        ok(&["cluster", "--layers", &l1, &l2, "--method", method, "--k", "3", "--seed", "1", "--out", &out]);
        for file in ["assignment.tsv", "consensus_H.tsv", "trace.csv", "diagnostics.json", "manifest.json"] {
            assert!(Path::new(&out).join(file).is_file(), "{method}: {file}");
        }
        let csv = ok(&["evaluate", "--assignment", &format!("{out}/assignment.tsv"), "--truth", &path(&dir, "net/truth.tsv")]);
        assert!(score(&csv, "nmi") > 0.9, "{method}: {csv}");
    }
}

#[test]
fn evaluate_writes_its_table_when_asked() {
    let dir = TempDir::new().unwrap();
    let assignment = write(&dir, "a.tsv", "node\tcluster\nx\t0\ny\t1\n");
    let truth = write(&dir, "t.tsv", "node\tlabel\ny\tb\nx\ta\n");
    let out = path(&dir, "eval");
    let printed = ok(&["evaluate", "--assignment", &assignment, "--truth", &truth, "--out", &out]);
    assert_eq!(std::fs::read_to_string(format!("{out}/evaluation.csv")).unwrap(), printed);
    assert_eq!(scores(&printed).iter().map(|(_, v)| *v).collect::<Vec<_>>(), vec![1.0; 4]);
}

#[test]
fn evaluate_crossed_partitions() {
    let dir = TempDir::new().unwrap();
    let assignment = write(&dir, "a.tsv", "node\tcluster\na\t0\nb\t1\nc\t0\nd\t1\n");
    let truth = write(&dir, "t.tsv", "node\tlabel\na\tx\nb\tx\nc\ty\nd\ty\n");
    let csv = ok(&["evaluate", "--assignment", &assignment, "--truth", &truth]);
    assert_eq!(score(&csv, "purity"), 0.5);
    assert!(score(&csv, "nmi").abs() < 1e-12);
    assert!((score(&csv, "ari") + 0.5).abs() < 1e-12);
    assert!((score(&csv, "rand_index") - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn evaluate_annotations() {
    let dir = TempDir::new().unwrap();
    let assignment = write(&dir, "a.tsv", "node\tcluster\na\t0\nb\t0\nc\t0\nd\t0\n");
    let annotations = write(&dir, "go.tsv", "node\tterm\na\tt1\nb\tt1\nc\tt2\nd\tt3\n");
    let csv = ok(&[
        "evaluate", "--assignment", &assignment, "--annotations", &annotations, "--min-term-nodes", "0",
    ]);
    assert_eq!(scores(&csv).len(), 1);
    assert!(score(&csv, "average_redundancy") > 0.0);
}

#[test]
fn collective_on_one_layer_without_consensus_matches_single() {
    let dir = TempDir::new().unwrap();
    let (l1, _) = planted(&dir);
    let single = path(&dir, "single");
    let collective = path(&dir, "collective");
    ok(&["cluster", "--layers", &l1, "--method", "snmf", "--k", "3", "--seed", "4", "--out", &single]);
    ok(&["cluster", "--layers", &l1, "--method", "csnmf", "--alpha", "0", "--k", "3", "--seed", "4", "--out", &collective]);
    let read = |dir: &str| std::fs::read_to_string(format!("{dir}/assignment.tsv")).unwrap();
    assert_eq!(read(&single), read(&collective));
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "sweep");
    let summary = ok(&[
        "sweep", "synth-n", "--grid", "0.02,0.2", "--methods", "csnmf,merged-snmf", "--seeds", "0,1,2", "--jobs", "2",
        "--out", &out,
    ]);
    let results = std::fs::read_to_string(format!("{out}/results.csv")).unwrap();
    assert_eq!(results.lines().next().unwrap(), "param,method,seed,purity,nmi,ari");
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
    assert_eq!(std::fs::read_to_string(format!("{out}/summary.csv")).unwrap(), summary);
}

#[test]
fn sweep_rejects_single_layer_methods() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&["sweep", "synth-c", "--methods", "snmf", "--out", &path(&dir, "s")]), 2);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let (l1, l2) = planted(&dir);
    let out = path(&dir, "run");
    ok(&["cluster", "--layers", &l1, &l2, "--method", "csnmf", "--k", "3", "--out", &out]);
    let assignment = format!("{out}/assignment.tsv");

    let stranger = write(&dir, "stranger.tsv", "node\tlabel\nnobody\t0\n");
    let output = cli(&["evaluate", "--assignment", &assignment, "--truth", &stranger]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("nobody"));

    let negative = write(&dir, "neg.tsv", "src\tdst\tweight\na\tb\t-1\n");
    assert_eq!(code(&["cluster", "--layers", &negative, "--method", "snmf", "--out", &out]), 2);
    let header = write(&dir, "header.tsv", "from\tto\tw\na\tb\t1\n");
    assert_eq!(code(&["cluster", "--layers", &header, "--method", "snmf", "--out", &out]), 2);
    assert_eq!(code(&["cluster", "--layers", &l1, &l2, "--method", "snmf", "--out", &out]), 2);
    assert_eq!(code(&["cluster", "--layers", &l1, "--method", "nmf", "--out", &out]), 2);
    assert_eq!(code(&["cluster", "--manifest", &path(&dir, "net/manifest.json")]), 2);
}

#[test]
fn strict_runs_report_missed_convergence() {
    let dir = TempDir::new().unwrap();
    let (l1, l2) = planted(&dir);
    let out = path(&dir, "run");
    let args = ["cluster", "--layers", &l1, &l2, "--method", "cpnmf", "--k", "3", "--max-iters", "1", "--out", &out];
    assert_eq!(code(&args), 0);
    assert_eq!(code(&[&args[..], &["--strict"]].concat()), 4);
    assert!(Path::new(&out).join("assignment.tsv").is_file());
}

#[test]
fn epsilon_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let (l1, _) = planted(&dir);
    let out = path(&dir, "run");
    let run = |eps: &str| {
        Command::new(env!("CARGO_BIN_EXE_multiplex-nmf"))
            .args(["cluster", "--layers", &l1, "--method", "snmf", "--k", "3", "--out", &out])
            .env("MULTIPLEX_NMF_EPSILON", eps)
            .output()
            .unwrap()
    };
    assert!(run("1e-9").status.success());
    let manifest = std::fs::read_to_string(format!("{out}/manifest.json")).unwrap();
    assert!(manifest.contains("\"epsilon\": 1e-9"), "{manifest}");
    assert_eq!(run("tiny").status.code(), Some(2));
    assert_eq!(run("-1").status.code(), Some(2));
}
