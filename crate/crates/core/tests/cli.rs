use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn boxlabel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxlabel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = boxlabel(args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{args:?}\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    ds: PathBuf,
}

fn fixture(images: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let ds = root.join("ds");
    ok(&["synth", "--out", s(&ds), "--seed", "11", "--images", images]);
    Fixture { _dir: dir, root, ds }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_then_evaluate_perfect_oracle() {
    let f = fixture("6");
    let out = f.root.join("pl");
    let msg = ok(&["generate", "--dataset", s(&f.ds), "--seed", "3", "--out", s(&out)]);
    assert!(msg.starts_with("generated 6 pseudo-labels in "), "{msg}");
    let files: Vec<String> = read_dir_sorted(&out).into_iter().map(|(n, _)| n).collect();
    assert!(files.contains(&"manifest.json".to_string()) && files.contains(&"traces.json".to_string()));
    assert_eq!(files.iter().filter(|n| n.ends_with(".png")).count(), 6);

    let json = ok(&["evaluate", "--gt", s(&f.ds), "--pred", s(&out)]);
    let report: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["miou"].as_f64(), Some(1.0));
    assert_eq!(report["image_count"].as_u64(), Some(6));
    assert!(report["config_fingerprint"].as_str().unwrap().starts_with("cfg-"));

    let report_path = f.root.join("report.json");
    let table = ok(&[
        "evaluate",
        "--gt",
        s(&f.ds),
        "--pred",
        s(&out),
        "--out",
        s(&report_path),
    ]);
    assert!(table.contains("mIoU"), "{table}");
    assert_eq!(std::fs::read_to_string(&report_path).unwrap(), json);
}

#[test]
fn reruns_are_byte_identical_across_jobs() {
    let f = fixture("8");
    let mut runs = Vec::new();
    for (i, jobs) in ["1", "4", "1"].iter().enumerate() {
        let out = f.root.join(format!("run{i}"));
        ok(&[
            "generate",
            "--dataset",
            s(&f.ds),
            "--seed",
            "9",
            "--noise",
            "preset-mild",
            "--jobs",
            jobs,
            "--out",
            s(&out),
        ]);
        let report = ok(&["evaluate", "--gt", s(&f.ds), "--pred", s(&out)]);
        runs.push((read_dir_sorted(&out), report));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn cache_hits_reproduce_output() {
    let f = fixture("4");
    let cache = f.root.join("cache");
    let args = |out: &Path| {
        vec![
            "generate".to_string(),
            "--dataset".into(),
            s(&f.ds).into(),
            "--seed".into(),
            "2".into(),
            "--noise".into(),
            "preset-parts".into(),
            "--cache-dir".into(),
            s(&cache).into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let a = f.root.join("a");
    let b = f.root.join("b");
    ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read_dir_sorted(&cache).len(), 4);
    ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read_dir_sorted(&cache).len(), 4);
    assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));
}

#[test]
fn exit_codes() {
    let f = fixture("2");
    assert_eq!(boxlabel(&["generate", "--no-such-flag"]).status.code(), Some(64));
    assert_eq!(boxlabel(&["--version"]).status.code(), Some(0));
    // No seed for the oracle.
    assert_eq!(
        boxlabel(&["generate", "--dataset", s(&f.ds), "--out", "x"])
            .status
            .code(),
        Some(1)
    );
    // Threshold out of range.
    let o = boxlabel(&[
        "generate",
        "--dataset",
        s(&f.ds),
        "--seed",
        "1",
        "--nms-iou",
        "2",
        "--out",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(1));
    // Missing dataset root.
    let missing = f.root.join("missing");
    assert_eq!(
        boxlabel(&["generate", "--dataset", s(&missing), "--seed", "1", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    let o = boxlabel(&["evaluate", "--gt", s(&f.ds), "--pred", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let f = fixture("3");
    let cfg = f.root.join("run.toml");
    let from_file = f.root.join("from_file");
    std::fs::write(
        &cfg,
        format!(
            "[run]\ndataset = {:?}\nseed = 5\nout = {:?}\n\n[pipeline]\nnms_iou = 0.4\n",
            s(&f.ds),
            s(&from_file)
        ),
    )
    .unwrap();
    ok(&["generate", "--config", s(&cfg)]);
    let overridden = f.root.join("flags");
    ok(&[
        "generate",
        "--config",
        s(&cfg),
        "--nms-iou",
        "0.3",
        "--out",
        s(&overridden),
    ]);
    let fp = |d: &Path| {
        let m: Value = serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap();
        m["config_fingerprint"].as_str().unwrap().to_string()
    };
    let default_run = f.root.join("defaults");
    ok(&[
        "generate",
        "--dataset",
        s(&f.ds),
        "--seed",
        "5",
        "--out",
        s(&default_run),
    ]);
    assert_ne!(fp(&from_file), fp(&overridden));
    assert_eq!(fp(&overridden), fp(&default_run));

    std::fs::write(&cfg, "[run]\nsurprise = 1\n").unwrap();
    assert_eq!(boxlabel(&["generate", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn ablation_rows_ordered() {
    let f = fixture("3");
    let json_path = f.root.join("ablation.json");
    let table = ok(&[
        "ablate",
        "--seed",
        "7",
        "--noise",
        "preset-mild",
        "--out",
        s(&json_path),
    ]);
    assert!(table.starts_with("labels"), "{table}");
    let rows: Value = serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    let got: Vec<(String, String, f64)> = rows
        .iter()
        .map(|r| {
            (
                r["labels_source"].as_str().unwrap().to_string(),
                r["boxes_source"].as_str().unwrap().to_string(),
                r["pseudo_miou"].as_f64().unwrap(),
            )
        })
        .collect();
    let sources: Vec<(&str, &str)> = got.iter().map(|(l, b, _)| (l.as_str(), b.as_str())).collect();
    assert_eq!(
        sources,
        [
            ("predicted", "predicted"),
            ("ground_truth", "predicted"),
            ("ground_truth", "ground_truth")
        ]
    );
    assert!(got[0].2 <= got[1].2 && got[1].2 <= got[2].2, "{got:?}");

    let single = ok(&["ablate", "--dataset", s(&f.ds), "--seed", "7", "--rows", "gg"]);
    assert_eq!(single.lines().count(), 2, "{single}");
    assert_eq!(
        boxlabel(&["ablate", "--seed", "7", "--rows", "xx"]).status.code(),
        Some(1)
    );
}

/// Writes interchange files by replaying an oracle run through the library.
fn write_interchange_from_oracle(ds_root: &Path, dir: &Path) {
    use boxlabel::backends::{Classifier, Detector, Segmenter};
    use boxlabel::dataio::{
        interchange_path, load_dataset, write_interchange, CandidateEntry, DetectionEntry, InterchangeRecord, Producer,
        RleJson, ScoreEntry,
    };
    use boxlabel::{ClassTable, OracleBackend, OracleNoise};
    use std::sync::Arc;

    let classes = ClassTable::load(&ds_root.join("classes.txt")).unwrap();
    let ds = Arc::new(load_dataset(ds_root, "voc_like".parse().unwrap(), &classes, "train").unwrap());
    let oracle = OracleBackend::new(Arc::clone(&ds), OracleNoise::none(1)).unwrap();
    let labels: Vec<_> = classes.foreground().collect();
    for img in ds.images() {
        let mut rec = InterchangeRecord::new(img.id.clone(), img.width, img.height, Producer::default());
        for p in oracle.classify(&img.id, &classes).unwrap() {
            rec.classifier_scores.push(ScoreEntry {
                class_id: p.class_id,
                score: p.score,
            });
        }
        for d in oracle.detect(&img.id, &labels, 0.0, 0.0).unwrap() {
            assert_eq!(d.id, rec.detections.len());
            let candidates = oracle
                .segment_in_box(&img.id, &d)
                .unwrap()
                .iter()
                .map(|c| CandidateEntry {
                    rle: RleJson::from(&c.mask),
                    proposal_score: c.proposal_score,
                })
                .collect();
            rec.detections.push(DetectionEntry {
                label_text: d.label_text,
                class_id: d.bbox.class_id(),
                bbox: d.bbox.coords(),
                score: d.bbox.score(),
                text_score: None,
                candidates,
            });
        }
        write_interchange(&rec, &interchange_path(dir, &img.id)).unwrap();
    }
}

#[test]
fn files_backend_and_validation() {
    let f = fixture("4");
    let inter = f.root.join("inter");
    write_interchange_from_oracle(&f.ds, &inter);

    let report = ok(&[
        "validate-interchange",
        "--interchange-dir",
        s(&inter),
        "--dataset",
        s(&f.ds),
    ]);
    assert!(report.ends_with("4 files, 0 invalid\n"), "{report}");
    assert_eq!(report.lines().filter(|l| l.starts_with("ok ")).count(), 4);

    let out = f.root.join("pl");
    ok(&[
        "generate",
        "--backend",
        "files",
        "--interchange-dir",
        s(&inter),
        "--dataset",
        s(&f.ds),
        "--out",
        s(&out),
    ]);
    let json = ok(&["evaluate", "--gt", s(&f.ds), "--pred", s(&out)]);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["miou"].as_f64(), Some(1.0));

    // Without a dataset the records themselves define the images.
    let bare = f.root.join("bare");
    ok(&[
        "generate",
        "--backend",
        "files",
        "--interchange-dir",
        s(&inter),
        "--classes",
        s(&f.ds.join("classes.txt")),
        "--out",
        s(&bare),
    ]);
    assert_eq!(read_dir_sorted(&bare), read_dir_sorted(&out));

    // Break one file.
    let victim = std::fs::read_dir(&inter).unwrap().next().unwrap().unwrap().path();
    let text = std::fs::read_to_string(&victim).unwrap();
    std::fs::write(&victim, text.replacen("\"score\": 1.0", "\"score\": 0.5", 1)).unwrap();
    let o = boxlabel(&["validate-interchange", "--interchange-dir", s(&inter)]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.contains("invalid ") && stdout.contains("hash mismatch"),
        "{stdout}"
    );
    assert!(stdout.ends_with("4 files, 1 invalid\n"));
    let o = boxlabel(&[
        "generate",
        "--backend",
        "files",
        "--interchange-dir",
        s(&inter),
        "--out",
        s(&bare),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evaluate_with_component_ap() {
    let f = fixture("4");
    let out = f.root.join("pl");
    ok(&["generate", "--dataset", s(&f.ds), "--seed", "3", "--out", s(&out)]);
    for kind in ["classification", "detection"] {
        let json = ok(&[
            "evaluate",
            "--gt",
            s(&f.ds),
            "--pred",
            s(&out),
            "--seed",
            "3",
            "--ap",
            kind,
        ]);
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["map"].as_f64(), Some(1.0), "{kind}: {json}");
    }
    let o = boxlabel(&[
        "evaluate",
        "--gt",
        s(&f.ds),
        "--pred",
        s(&out),
        "--seed",
        "3",
        "--ap",
        "segm",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspect_prints_traces() {
    let f = fixture("3");
    let json = ok(&[
        "inspect",
        "--dataset",
        s(&f.ds),
        "--seed",
        "4",
        "--noise",
        "preset-parts",
        "--image",
        "synth_1",
    ]);
    let v: Value = serde_json::from_str(&json).unwrap();
    let traces = v.as_array().unwrap();
    assert_eq!(traces.len(), 1);
    assert_eq!(traces[0]["image_id"], "synth_1");
    assert!(!traces[0]["boxes"].as_array().unwrap().is_empty());
    let o = boxlabel(&["inspect", "--dataset", s(&f.ds), "--seed", "4", "--image", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}
