mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn semlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semlink"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn train_args<'a>(features: &'a str, glove: &'a str, labels: &'a str, out: &'a str, model: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--model",
        model,
        "--features",
        features,
        "--glove",
        glove,
        "--labels",
        labels,
        "--seed",
        "7",
        "--out",
        out,
        "--epochs",
        "3",
    ]
}

#[test]
fn train_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (f, g, l) = (
        fixture("features.jsonl"),
        fixture("glove_toy.txt"),
        fixture("labels.txt"),
    );
    for model in ["baseline", "fusion"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{model}{run}.json"));
            let o = semlink(&train_args(path(&f), path(&g), path(&l), path(&out), model));
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            outputs.push([
                read(&out),
                read(&dir.path().join(format!("{model}{run}.report.json"))),
                read(&dir.path().join(format!("{model}{run}.curves.csv"))),
            ]);
        }
        assert_eq!(outputs[0], outputs[1], "{model}");
    }
}

#[test]
fn train_ntl_nms_and_cv_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    for run in ["a", "b"] {
        let ntl = d(&format!("ntl_{run}.json"));
        let o = semlink(&[
            "train-ntl",
            "--kb",
            path(&fixture("toy_kb.tsv")),
            "--glove",
            path(&fixture("glove_toy.txt")),
            "--seed",
            "5",
            "--out",
            path(&ntl),
            "--epochs",
            "20",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let kept = d(&format!("kept_{run}.jsonl"));
        let o = semlink(&[
            "nms",
            "--detections",
            path(&fixture("detections.jsonl")),
            "--out",
            path(&kept),
            "--entities",
        ]);
        assert!(o.status.success());
        let cv = d(&format!("cv_{run}.json"));
        let o = semlink(&[
            "cv",
            "--model",
            "baseline",
            "--features",
            path(&fixture("features.jsonl")),
            "--glove",
            path(&fixture("glove_toy.txt")),
            "--seed",
            "2",
            "--folds",
            "3",
            "--epochs",
            "2",
            "--out",
            path(&cv),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["ntl_{}.json", "ntl_{}.report.json", "kept_{}.jsonl", "cv_{}.json"] {
        let (a, b) = (d(&name.replace("{}", "a")), d(&name.replace("{}", "b")));
        assert_eq!(read(&a), read(&b), "{name}");
    }
}

#[test]
fn checkpoint_round_trip_through_eval_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let (f, g, l) = (
        fixture("features.jsonl"),
        fixture("glove_toy.txt"),
        fixture("labels.txt"),
    );
    let ckpt = dir.path().join("ckpt.json");
    assert!(
        semlink(&train_args(path(&f), path(&g), path(&l), path(&ckpt), "baseline"))
            .status
            .success()
    );
    let o = semlink(&[
        "eval",
        "--model",
        path(&ckpt),
        "--features",
        path(&f),
        "--glove",
        path(&g),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["records"], 24);
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let preds = dir.path().join("preds.jsonl");
    let o = semlink(&[
        "predict",
        "--model",
        path(&ckpt),
        "--features",
        path(&f),
        "--glove",
        path(&g),
        "--out",
        path(&preds),
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(read(&preds)).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 24);
    let correct = rows.iter().filter(|r| r["label"] == r["predicted"]).count();
    assert_eq!(correct as f64 / 24.0, acc);
}

#[test]
fn score_triple_reports_both_scores() {
    let dir = tempfile::tempdir().unwrap();
    let ntl = dir.path().join("ntl.json");
    let kb = fixture("toy_kb.tsv");
    assert!(semlink(&[
        "train-ntl",
        "--kb",
        path(&kb),
        "--glove",
        path(&fixture("glove_toy.txt")),
        "--seed",
        "1",
        "--out",
        path(&ntl)
    ])
    .status
    .success());
    let o = semlink(&[
        "score-triple",
        "--kb",
        path(&kb),
        "--model",
        path(&ntl),
        "--head",
        "person",
        "--rel",
        "uses",
        "--tail",
        "tennis racket",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["plausibility"].as_f64().unwrap(), -v["raw_score"].as_f64().unwrap());
    assert_eq!(v["in_kb"], true);

    let o = semlink(&["rank-tails", "--model", path(&ntl), "--head", "person", "--rel", "uses"]);
    let ranks: Vec<serde_json::Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(ranks.len(), 6);
    assert_eq!(ranks[0]["tail"], "tennis racket");
}

#[test]
fn exit_codes() {
    assert_eq!(semlink(&["no-such-verb"]).status.code(), Some(2));
    assert_eq!(semlink(&["nms", "--bogus"]).status.code(), Some(2));
    let o = semlink(&[
        "train",
        "--model",
        "baseline",
        "--features",
        "f",
        "--glove",
        "g",
        "--out",
        "o",
    ]);
    assert_eq!(o.status.code(), Some(2), "--seed is required");
    assert_eq!(semlink(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"image_id\":\"a\",\"label\":\"Traffic\",\"entities\":[],\"vgg\":[1,2]}\nnot json\n",
    )
    .unwrap();
    let o = semlink(&["ingest-check", "--features", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let errors = v["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 2);
    assert!(errors[0].as_str().unwrap().starts_with("line 1:"));
    assert!(errors[1].as_str().unwrap().starts_with("line 2:"));

    let o = semlink(&["nms", "--detections", path(&bad), "--out", path(&dir.path().join("k"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn grad_check_verb() {
    let o = semlink(&["grad-check", "--seed", "3", "--draws", "2", "--coords", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}
