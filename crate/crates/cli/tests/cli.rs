use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfc-audit"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn ingest(out: &Path, seed: &str) {
    let mftc = fixtures().join("mftc_sample.json");
    let mfrc = fixtures().join("mfrc_sample.csv");
    ok(&[
        "ingest",
        "--mftc",
        mftc.to_str().unwrap(),
        "--mfrc",
        mfrc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        seed,
    ]);
}

#[test]
fn ingest_writes_golden_canonical_files() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), "42");
    for name in ["twitter.jsonl", "twitter.exclusions.jsonl", "reddit.jsonl", "reddit.exclusions.jsonl"] {
        let got = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let want = std::fs::read_to_string(fixtures().join(format!("golden_{name}"))).unwrap();
        assert_eq!(got, want, "{name}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("twitter.split.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["sizes"]["train"].as_u64().unwrap() + meta["sizes"]["val"].as_u64().unwrap() + meta["sizes"]["test"].as_u64().unwrap(), 8);
}

#[test]
fn same_seed_same_splits() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ingest(a.path(), "42");
    ingest(b.path(), "42");
    ingest(c.path(), "7");
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["twitter.train.jsonl", "twitter.val.jsonl", "twitter.test.jsonl"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
    let all = |d: &Path| {
        ["twitter.train.jsonl", "twitter.val.jsonl", "twitter.test.jsonl"].map(|f| read(d, f))
    };
    assert_ne!(all(a.path()), all(c.path()));
}

#[test]
fn bad_path_fails_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ingest", "--mftc", "/no/such/mftc.json", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/mftc.json"));

    let out = run(&["audit", "/no/such/preds.tsv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/preds.tsv"));
}

#[test]
fn malformed_corpus_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"[{"Corpus": "ALM", "Tweets": [{"tweet_id": "1", "tweet_text": "hi", "annotations": ["#).unwrap();
    let out = run(&["ingest", "--mftc", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("$[0].Tweets[0]"), "{err}");
}

fn synth_config(path: &Path, seed: u64, direction: &str, tpr: f64, fpr: f64) {
    let params = |base: f64| {
        let p = serde_json::json!({"base_rate": base, "tpr": tpr, "fpr": fpr});
        serde_json::json!({"authority": p, "care": p, "fairness": p, "loyalty": p, "non-moral": p})
    };
    let cfg = serde_json::json!({
        "seed": seed,
        "direction": direction,
        "logits": true,
        "twitter": {"n": 150, "labels": params(0.3)},
        "reddit": {"n": 150, "labels": params(0.5)},
    });
    std::fs::write(path, cfg.to_string()).unwrap();
}

fn synth_four(dir: &Path, tpr: f64, fpr: f64) -> Vec<String> {
    ["MFTC->MFTC", "MFRC->MFRC", "MFRC->MFTC", "MFTC->MFRC"]
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let cfg = dir.join(format!("cfg{i}.json"));
            let out = dir.join(format!("pred{i}.tsv"));
            synth_config(&cfg, i as u64, d, tpr, fpr);
            ok(&["synth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            out.to_str().unwrap().to_string()
        })
        .collect()
}

#[test]
fn perfect_synthetic_classifier_audits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth_four(dir.path(), 1.0, 0.0);
    let mut args = vec!["audit", "--boot-n", "100", "--format", "json"];
    args.extend(files.iter().map(String::as_str));
    let report: serde_json::Value = serde_json::from_str(&ok(&args)).unwrap();
    for s in report["scenarios"].as_object().unwrap().values() {
        assert_eq!(s["micro_f1"]["value"], 1.0);
    }
    for l in report["fairness"]["per_label"].as_object().unwrap().values() {
        assert_eq!(l["eo"]["value"], 0.0);
    }
    assert_eq!(report["gaps"].as_array().unwrap().len(), 0);
}

#[test]
fn audit_markdown_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth_four(dir.path(), 0.7, 0.2);
    let mut args = vec!["audit", "--boot-n", "100", "--seed", "3"];
    args.extend(files.iter().map(String::as_str));
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    for section in ["## Classification", "## Degradation", "## Fairness", "## Moral Fairness Consistency", "## Spearman"] {
        assert!(a.contains(section), "missing {section}");
    }
    assert!(a.contains("| aggregate |"));
}

#[test]
fn cross_domain_only_marks_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth_four(dir.path(), 0.7, 0.2);
    let out = ok(&["audit", "--boot-n", "50", &files[2], &files[3]]);
    assert!(out.contains("## Gaps"));
    assert!(out.contains("in-domain scenario MFTC->MFTC: no prediction file"));
    assert!(out.contains("## Moral Fairness Consistency"));
}

#[test]
fn threshold_flag_rebinarizes() {
    let dir = tempfile::tempdir().unwrap();
    let files = synth_four(dir.path(), 0.7, 0.2);
    let out = ok(&["fairness", "--boot-n", "20", "--threshold", "0.9999", "--format", "json", &files[2], &files[3]]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    // nothing clears the threshold, so both groups predict nothing
    assert_eq!(v["per_label"]["care"]["dp_abs"]["value"], 0.0);
}

#[test]
fn mfc_from_differences() {
    let out = ok(&["mfc", "--diffs", "0.22,0.04,0.05,0.03,0.08"]);
    assert!(out.contains("| authority | 0.7800 |"), "{out}");
    assert!(out.contains("| aggregate | 0.9160 |"), "{out}");
    let bad = run(&["mfc", "--diffs", "0.1,0.2"]);
    assert!(!bad.status.success());
}

#[test]
fn correlate_vectors_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let v = serde_json::json!({
        "mfc": [0.7781, 0.9556, 0.9499, 0.9666, 0.9205],
        "f1": [0.5, 0.6, 0.7, 0.8, 0.9],
        "precision": [0.5, 0.6, 0.7, 0.8, 0.9],
        "recall": [0.9, 0.8, 0.7, 0.6, 0.5],
        "dp": [0.22, 0.04, 0.05, 0.03, 0.08],
        "eo": [0.40, 0.26, 0.22, 0.20, 0.34]
    });
    std::fs::write(&path, v.to_string()).unwrap();
    let out = ok(&["correlate", "--vectors", path.to_str().unwrap(), "--format", "json"]);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["against_mfc"]["dp"]["rho"], -1.0);
    assert!((r["against_mfc"]["eo"]["rho"].as_f64().unwrap() + 0.9).abs() < 1e-12);
    assert!((r["against_mfc"]["dp"]["p_value"].as_f64().unwrap() - 2.0 / 120.0).abs() < 1e-15);
    assert_eq!(r["p_method"], "exact_permutation");

    std::fs::write(&path, r#"{"mfc": [1, 2, 3]}"#).unwrap();
    let out = run(&["correlate", "--vectors", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing metric vector `f1`"));
}

#[test]
fn stats_on_canonical_output() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), "42");
    let out = ok(&["stats", "--format", "json", dir.path().join("twitter.jsonl").to_str().unwrap()]);
    let s: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(s["n_instances"], 8);
    assert_eq!(s["label_counts"]["care"], 2);
    assert_eq!(s["label_counts"]["authority"], 2);
}
