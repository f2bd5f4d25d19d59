use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scriptsort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scriptsort"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthetic corpus with a small spec so the tests stay quick.
fn small_corpus(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.json");
    fs::write(
        &spec,
        r#"{
  "profiles": [
    {"name": "cyrillic", "class_probs": [0.85, 0.05, 0.05, 0.05]},
    {"name": "angular", "class_probs": [0.05, 0.85, 0.05, 0.05]},
    {"name": "round", "class_probs": [0.05, 0.05, 0.85, 0.05]}
  ],
  "docs_per_profile": [4, 4, 4],
  "seq_len": [600, 800],
  "seed": 5
}"#,
    )
    .unwrap();
    let corpus = dir.join("corpus");
    let out = scriptsort(&["synth", "--spec", p(&spec), "--out", p(&corpus)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    corpus
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&scriptsort(&[])), 1);
    assert_eq!(code(&scriptsort(&["frobnicate"])), 1);
    assert_eq!(code(&scriptsort(&["--help"])), 0);

    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("f.csv");
    fs::write(&csv, "doc_id,f1\n").unwrap();
    let out = scriptsort(&["cluster", p(&csv), "--alpha", "-1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[cluster]\nkay = 3\n").unwrap();
    let out = scriptsort(&["cluster", p(&csv), "--config", p(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("kay"), "{}", stderr(&out));

    let cfg = dir.path().join("range.toml");
    fs::write(&cfg, "runs = 0\n").unwrap();
    let out = scriptsort(&["cluster", p(&csv), "--config", p(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("runs"), "{}", stderr(&out));
}

#[test]
fn data_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&scriptsort(&["cluster", p(&missing)])), 2);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"doc_id": "x", "codes": [0, 1, 7, 2]}"#).unwrap();
    let out = scriptsort(&["features", p(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));

    let garbage = dir.path().join("page.pgm");
    fs::write(&garbage, b"P5\n10 10\n255\nshort").unwrap();
    assert_eq!(code(&scriptsort(&["encode", p(&garbage), "--out", p(&dir.path().join("o"))])), 2);
}

#[test]
fn empty_input_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out_dir = dir.path().join("out");
    let out = scriptsort(&["pipeline", p(&empty), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists());
    let out = scriptsort(&["encode", p(&empty), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists());
}

#[test]
fn stages_compose() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path());
    for f in ["truth.csv", "spec.json", "images", "coded"] {
        assert!(corpus.join(f).exists(), "{f}");
    }

    let coded = dir.path().join("coded");
    let out = scriptsort(&["encode", p(&corpus.join("images")), "--out", p(&coded)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for entry in fs::read_dir(corpus.join("coded")).unwrap() {
        let entry = entry.unwrap();
        if entry.path().extension().is_some_and(|e| e == "txt") {
            let planted = fs::read_to_string(entry.path()).unwrap();
            let recovered = fs::read_to_string(coded.join(entry.file_name())).unwrap();
            assert_eq!(planted, recovered, "{:?}", entry.file_name());
        }
    }

    let features = dir.path().join("features.csv");
    let out = scriptsort(&["features", p(&coded), "--out", p(&features)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("doc_id,f1,"));

    let clusters = dir.path().join("clusters.json");
    let out = scriptsort(&["cluster", p(&features), "-k", "3", "--runs", "3", "--out", p(&clusters)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&clusters).unwrap()).unwrap();
    assert_eq!(json["assignments"].as_object().unwrap().len(), 12);
    assert_eq!(json["runs"].as_array().unwrap().len(), 3);

    let report = dir.path().join("report");
    let out = scriptsort(&[
        "evaluate",
        "--truth",
        p(&corpus.join("truth.csv")),
        "--pred",
        p(&clusters),
        "--features",
        p(&features),
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8_lossy(&out.stdout);
    for method in ["ga-icda", "k-means", "complete-linkage"] {
        assert!(table.contains(method), "{table}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0]["runs"], 3);
    assert!(report.join("report.csv").exists() && report.join("report.txt").exists());
}

#[test]
fn pipeline_ignores_argument_order() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path());
    let mut images: Vec<PathBuf> = fs::read_dir(corpus.join("images"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    images.sort();
    let run = |files: &[PathBuf], name: &str| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["pipeline".to_string()];
        args.extend(files.iter().map(|f| p(f).to_string()));
        args.extend(["--out", p(&out_dir), "--seed", "3", "-k", "3", "--no-baselines"].map(String::from));
        args.extend(["--truth".to_string(), p(&corpus.join("truth.csv")).to_string()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = scriptsort(&argv);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out_dir
    };
    let forward = run(&images, "fwd");
    images.reverse();
    let backward = run(&images, "bwd");
    for f in ["features.csv", "clusters.json", "config.toml", "report.json"] {
        assert_eq!(
            fs::read(forward.join(f)).unwrap(),
            fs::read(backward.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let config = fs::read_to_string(forward.join("config.toml")).unwrap();
    assert!(config.contains("seed = 3"), "{config}");
}
