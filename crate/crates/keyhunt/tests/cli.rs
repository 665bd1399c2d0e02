//! Integration tests for the command-line surface: workflows, exit codes
//! and output reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn keyhunt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keyhunt"))
        .args(args)
        .output()
        .expect("spawn keyhunt")
}

fn assert_exit(output: &Output, code: i32, context: &str) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "{context}: stdout={} stderr={}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Directory tree as (relative path, file bytes), sorted.
fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn generate(dir: &Path, split: &str, count: usize, seed: u64, pcap: bool) {
    let mut args = vec![
        "generate".to_string(),
        "--out".into(),
        dir.display().to_string(),
        "--split".into(),
        split.into(),
        "--count".into(),
        count.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--cipher".into(),
        "aes192-ctr".into(),
    ];
    if pcap {
        args.push("--pcap".into());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_exit(&keyhunt(&refs), 0, "generate");
}

#[test]
fn generate_is_reproducible_and_empty_run_writes_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    generate(&a, "training", 3, 0, false);
    generate(&b, "training", 3, 0, false);
    assert_eq!(tree(&a), tree(&b), "same seed must produce identical trees");

    let empty = dir.path().join("empty");
    generate(&empty, "training", 0, 0, false);
    let files = tree(&empty);
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].0, "manifest.json");
}

#[test]
fn generate_into_unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("nested");
    let output = keyhunt(&["generate", "--out", out.to_str().unwrap(), "--count", "1"]);
    assert_exit(&output, 4, "generate into file path");
}

/// Shared fixture: a small dataset plus a trained model.
fn workspace() -> (tempfile::TempDir, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generate(&data, "training", 10, 7, false);
    generate(&data, "validation", 5, 9000, true);
    let model = dir.path().join("model.khm");
    let output = keyhunt(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_exit(&output, 0, "train");
    (dir, data.display().to_string(), model.display().to_string())
}

fn first_validation_json(data: &str) -> String {
    let dir = Path::new(data).join("validation/basic-connect/V_8_0_P1/24");
    let mut jsons: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    jsons.sort();
    jsons[0].display().to_string()
}

#[test]
fn extract_recovers_the_logged_keys_and_repeats_identically() {
    let (_dir, data, model) = workspace();
    let json = first_validation_json(&data);
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();

    let run = || {
        keyhunt(&[
            "extract", "--json", &json, "--model", &model, "--mode", "both",
        ])
    };
    let output = run();
    assert_exit(&output, 0, "extract both");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let iv_hex = log["KEY_A"].as_str().unwrap();
    let key_hex = log["KEY_C"].as_str().unwrap();
    // both methods print the same, correct pair
    assert_eq!(
        stdout.matches(&format!("iv: {iv_hex}")).count(),
        2,
        "{stdout}"
    );
    assert_eq!(
        stdout.matches(&format!("key: {key_hex}")).count(),
        2,
        "{stdout}"
    );

    // reproducible once timing lines are excluded
    let strip = |text: &str| -> String {
        text.lines()
            .filter(|l| !l.starts_with("elapsed_seconds:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let again = String::from_utf8(run().stdout).unwrap();
    assert_eq!(strip(&stdout), strip(&again));
}

#[test]
fn extract_from_the_session_capture_matches_the_raw_packet() {
    let (_dir, data, model) = workspace();
    let json = first_validation_json(&data);
    let pcap = json.replace(".json", ".pcap");
    let output = keyhunt(&[
        "extract", "--json", &json, "--pcap", &pcap, "--model", &model, "--mode", "ml",
    ]);
    assert_exit(&output, 0, "extract from pcap");
}

#[test]
fn extract_exit_codes() {
    let (dir, data, _model) = workspace();
    let json = first_validation_json(&data);

    // missing model file
    let output = keyhunt(&[
        "extract",
        "--json",
        &json,
        "--model",
        "/no/such/model.khm",
        "--mode",
        "ml",
    ]);
    assert_exit(&output, 2, "missing model");

    // keyless heap: nothing to find
    let zero_heap = dir.path().join("zero-heap.raw");
    std::fs::write(&zero_heap, vec![0u8; 64 * 1024]).unwrap();
    let packet = json.replace(".json", "-packet.raw");
    let output = keyhunt(&[
        "extract",
        "--heap",
        zero_heap.to_str().unwrap(),
        "--cipher",
        "aes192-ctr",
        "--ciphertext",
        &packet,
        "--mode",
        "brute",
    ]);
    assert_exit(&output, 3, "keyless heap");

    // unknown cipher
    let output = keyhunt(&[
        "extract",
        "--heap",
        zero_heap.to_str().unwrap(),
        "--cipher",
        "rot13",
        "--ciphertext",
        &packet,
    ]);
    assert_exit(&output, 2, "unknown cipher");

    // bare heap without --cipher
    let output = keyhunt(&[
        "extract",
        "--heap",
        zero_heap.to_str().unwrap(),
        "--ciphertext",
        &packet,
    ]);
    assert_exit(&output, 2, "missing --cipher");

    // clap usage error
    let output = keyhunt(&["extract", "--bogus-flag"]);
    assert_exit(&output, 2, "unknown flag");
}

#[test]
fn classify_with_an_impossible_threshold_writes_an_empty_file() {
    let (dir, data, model) = workspace();
    let json = first_validation_json(&data);
    let out = dir.path().join("offsets.txt");
    let output = keyhunt(&[
        "classify",
        "--json",
        &json,
        "--model",
        &model,
        "--decision-threshold",
        "1.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "classify");
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");

    // the default threshold finds something, one decimal offset per line
    let output = keyhunt(&["classify", "--json", &json, "--model", &model]);
    assert_exit(&output, 0, "classify default");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(!stdout.is_empty());
    assert!(stdout.lines().all(|l| l.parse::<u64>().is_ok()), "{stdout}");
}

#[test]
fn evaluate_writes_reports_with_all_four_metrics() {
    let (dir, data, model) = workspace();
    let prefix = dir.path().join("report");
    let output = keyhunt(&[
        "evaluate",
        "--dataset",
        &data,
        "--model",
        &model,
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "evaluate");
    let csv = std::fs::read_to_string(format!("{}-metrics.csv", prefix.display())).unwrap();
    let header = csv.lines().next().unwrap();
    for column in ["accuracy", "precision", "recall", "f1"] {
        assert!(header.contains(column), "{header}");
    }
    assert_eq!(
        csv.lines().count(),
        4,
        "three classifiers plus header: {csv}"
    );
    assert!(Path::new(&format!("{}-retrieval.csv", prefix.display())).exists());
    assert!(Path::new(&format!("{}-metrics.txt", prefix.display())).exists());
}

#[test]
fn bench_writes_two_method_rows_per_entry() {
    let (dir, data, model) = workspace();
    let prefix = dir.path().join("bench");
    let output = keyhunt(&[
        "bench",
        "--dataset",
        &data,
        "--model",
        &model,
        "--runs",
        "3",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "bench");
    let csv = std::fs::read_to_string(format!("{}-bench.csv", prefix.display())).unwrap();
    // 5 validation entries x 2 methods
    assert_eq!(csv.lines().count(), 1 + 5 * 2, "{csv}");
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.starts_with("brute-force,") || l.starts_with("ml,")));

    let output = keyhunt(&[
        "bench",
        "--dataset",
        &data,
        "--model",
        &model,
        "--runs",
        "2",
        "--out",
        "x",
    ]);
    assert_exit(&output, 2, "runs below three");
}

#[test]
fn preprocess_emits_slices_or_pages() {
    let (_dir, data, _model) = workspace();
    let json = first_validation_json(&data);
    let output = keyhunt(&["preprocess", "--json", &json, "--what", "pages"]);
    assert_exit(&output, 0, "preprocess pages");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.split_whitespace().count() == 2));

    let output = keyhunt(&["preprocess", "--json", &json, "--what", "slices"]);
    assert_exit(&output, 0, "preprocess slices");
    let stdout = String::from_utf8(output.stdout.clone()).unwrap();
    assert!(stdout.lines().all(|l| l.parse::<u64>().is_ok()));

    // the literal printed polarity marks low-entropy rows instead
    let literal = keyhunt(&[
        "preprocess",
        "--json",
        &json,
        "--what",
        "slices",
        "--paper-literal",
        "eq2-printed",
    ]);
    assert_exit(&literal, 0, "preprocess literal");
    assert_ne!(literal.stdout, output.stdout);
}

#[test]
fn train_on_missing_dataset_is_a_config_error() {
    let output = keyhunt(&[
        "train",
        "--dataset",
        "/no/such/dataset",
        "--model",
        "/tmp/x.khm",
    ]);
    assert_exit(&output, 2, "empty selection");
}
