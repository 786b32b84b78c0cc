use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use digae::dataset::write_edgelist;
use digae::fixtures::bowtie_graph;

fn digae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digae"))
        .args(args)
        .env_remove("DIGAE_DATA")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = digae(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = digae(&[
        "benchmark",
        "--dataset",
        "coraml",
        "--data-root",
        path(dir.path()),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diverging_katz_is_a_numerical_error() {
    // Synthetic graphs are acyclic, so the Katz series always converges
    // there; a random digraph has cycles and spectral radius near n·p.
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let mut buf = Vec::new();
    write_edgelist(&digae::dataset::random_digraph(60, 0.2, 1).unwrap(), &mut buf).unwrap();
    fs::write(&edges, buf).unwrap();
    let out = digae(&[
        "hope-baseline",
        "--edges",
        path(&edges),
        "--katz-decay",
        "0.5",
        "--repeats",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn every_subcommand_documents_its_flags() {
    for sub in [
        "train",
        "benchmark",
        "grid",
        "wl",
        "svd-baseline",
        "hope-baseline",
        "analytics",
        "spectrum",
        "export-embeddings",
        "replay",
    ] {
        let out = digae(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("--out"), "{sub}");
    }
}

#[test]
fn wl_reports_the_reduction_on_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("bowtie.txt");
    let mut buf = Vec::new();
    write_edgelist(&bowtie_graph(), &mut buf).unwrap();
    fs::write(&edges, buf).unwrap();
    let out = digae(&["wl", "--edges", path(&edges), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("reduction check = true"));
    assert!(dir.path().join("o/wl.csv").exists());
    assert!(dir.path().join("o/manifest.json").exists());
}

#[test]
fn benchmark_writes_one_row_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let out = digae(&[
        "benchmark",
        "--synthetic",
        "150",
        "--model",
        "digae-1l",
        "--repeats",
        "2",
        "--epochs",
        "5",
        "--hidden",
        "8",
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("auc_mean") && lines[0].contains("ap_std"));
    assert!(lines[1].contains("digae-1l"));
    let timing = fs::read_to_string(out_dir.join("results.timing.csv")).unwrap();
    assert!(timing.lines().next().unwrap().contains("time_mean"));
}

#[test]
fn replay_reproduces_every_csv_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let out = digae(&[
        "train",
        "--synthetic",
        "120",
        "--epochs",
        "15",
        "--hidden",
        "8",
        "--seed",
        "3",
        "--out",
        path(&first),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = digae(&["replay", path(&first.join("manifest.json")), "--out", path(&second)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["loss.csv", "metrics.csv", "model.bin"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}
