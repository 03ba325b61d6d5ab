use std::path::Path;
use std::sync::Arc;

use boxlabel::backends::{Classifier, Detector, Segmenter};
use boxlabel::dataio::{
    decode_label_png, encode_label_png, export_pseudo_labels, interchange_path, load_dataset, load_pseudo_labels,
    parse_interchange, read_interchange, write_interchange, write_voc_like, CandidateEntry, DetectionEntry,
    InterchangeRecord, Producer, ResultCache, RleJson, ScoreEntry,
};
use boxlabel::maskgeom::rle_encode;
use boxlabel::synth::SynthSpec;
use boxlabel::{
    BitMask, ClassId, ClassTable, DatasetIndex, Error, FileBackend, LabelRaster, OracleBackend, OracleNoise,
    PipelineConfig, PseudoLabeler,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synth(seed: u64, images: usize) -> DatasetIndex {
    SynthSpec {
        seed,
        images,
        width: 48,
        height: 40,
        min_radius: 3,
        max_radius: 9,
        ..Default::default()
    }
    .generate()
    .unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

#[test]
fn voc_layout_roundtrips() {
    let ds = synth(3, 5);
    let dir = tempfile::tempdir().unwrap();
    write_voc_like(&ds, dir.path()).unwrap();
    let classes = ClassTable::load(&dir.path().join("classes.txt")).unwrap();
    assert_eq!(&classes, ds.classes());
    let back = load_dataset(dir.path(), "voc_like".parse().unwrap(), &classes, "train").unwrap();
    assert_eq!(back.len(), ds.len());
    for (a, b) in ds.images().iter().zip(back.images()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.gt.as_ref().unwrap().raster, b.gt.as_ref().unwrap().raster);
        assert_eq!(a.gt.as_ref().unwrap().instances, b.gt.as_ref().unwrap().instances);
    }
    let missing = load_dataset(dir.path(), "voc_like".parse().unwrap(), &classes, "val").unwrap_err();
    assert!(missing.is_io());
    assert!(
        load_dataset(&dir.path().join("nope"), "voc_like".parse().unwrap(), &classes, "train")
            .unwrap_err()
            .is_io()
    );
}

#[test]
fn voc_rejects_labels_outside_table() {
    let ds = synth(4, 2);
    let dir = tempfile::tempdir().unwrap();
    write_voc_like(&ds, dir.path()).unwrap();
    let tiny = ClassTable::from_names(["background", "aeroplane"]).unwrap();
    let err = load_dataset(dir.path(), "voc_like".parse().unwrap(), &tiny, "train").unwrap_err();
    assert!(matches!(err, Error::InvalidLabel { .. }), "{err}");
}

const COCO: &str = r#"{
  "images": [
    {"id": 7, "file_name": "a.jpg", "width": 6, "height": 5},
    {"id": 9, "file_name": "b.jpg", "width": 4, "height": 3}
  ],
  "categories": [{"id": 1, "name": "motorbike"}, {"id": 3, "name": "Dining  Table"}],
  "annotations": [
    {"id": 1, "image_id": 7, "category_id": 1, "segmentation": [[1, 1, 4, 1, 4, 3, 1, 3]]},
    {"id": 2, "image_id": 7, "category_id": 3, "segmentation": {"size": [5, 6], "counts": [27, 2, 1]}},
    {"id": 3, "image_id": 9, "category_id": 3, "segmentation": {"size": [3, 4], "counts": [0, 3, 9]}, "iscrowd": 1}
  ]
}"#;

#[test]
fn coco_layout_loads_polygons_rle_and_crowd() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("annotations/instances_train.json"), COCO);
    let classes = ClassTable::pascal_voc();
    let ds = load_dataset(dir.path(), "coco_like".parse().unwrap(), &classes, "train").unwrap();
    assert_eq!(ds.ids().collect::<Vec<_>>(), ["a", "b"]);

    let moto = classes.resolve("motorcycle").unwrap();
    let table = classes.resolve("diningtable").unwrap();
    let a = ds.ground_truth("a").unwrap();
    assert_eq!(a.instances.len(), 2);
    let mut expected = LabelRaster::background(6, 5).unwrap();
    for (x, y) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)] {
        expected.set(x, y, moto);
    }
    // Column-major: 27 zeros fill columns 0..5 and two rows of column 5.
    expected.set(5, 2, table);
    expected.set(5, 3, table);
    assert_eq!(a.raster, expected);

    let b = ds.ground_truth("b").unwrap();
    assert!(b.instances.is_empty());
    let crowd: Vec<_> = (0..3).map(|y| b.raster.get(0, y)).collect();
    assert_eq!(crowd, vec![ClassId::IGNORE; 3]);
    assert_eq!(b.raster.get(1, 0), ClassId(0));
}

#[test]
fn coco_rejects_compressed_rle_and_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let classes = ClassTable::pascal_voc();
    let compressed = COCO.replace("[27, 2, 1]", "\"abc\"");
    write(&dir.path().join("annotations/instances_train.json"), &compressed);
    let err = load_dataset(dir.path(), "coco_like".parse().unwrap(), &classes, "train").unwrap_err();
    assert!(err.to_string().contains("compressed"), "{err}");

    let unknown = COCO.replace("motorbike", "unicycle");
    write(&dir.path().join("annotations/instances_train.json"), &unknown);
    let err = load_dataset(dir.path(), "coco_like".parse().unwrap(), &classes, "train").unwrap_err();
    assert!(
        matches!(&err, Error::UnknownClass(v) if v == &["unicycle".to_string()]),
        "{err}"
    );
}

#[test]
fn class_table_text_and_aliases() {
    let t = ClassTable::parse("# comment\nbackground\nmotorcycle: motor bikes, motorbike\n\ntv: tvmonitor\n").unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(ClassTable::parse(&t.to_text()).unwrap(), t);
    assert_eq!(t.resolve("Motor  Bikes"), Some(ClassId(1)));
    assert_eq!(t.resolve("tvmonitor"), Some(ClassId(2)));
    assert_eq!(t.resolve("bus"), None);
    assert!(ClassTable::parse("background\ncat\ncat\n").is_err());
    let voc = ClassTable::pascal_voc();
    assert_eq!(voc.len(), 21);
    assert_eq!(ClassTable::parse(&voc.to_text()).unwrap(), voc);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn png_roundtrip(w in 1u32..40, h in 1u32..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u8> = (0..w * h)
            .map(|_| if rng.gen_bool(0.1) { 255 } else { rng.gen_range(0..6) })
            .collect();
        let r = LabelRaster::from_vec(w, h, labels).unwrap();
        let bytes = encode_label_png(&r);
        prop_assert_eq!(decode_label_png(&bytes, Path::new("x.png")).unwrap(), r);
    }
}

#[test]
fn png_decode_rejects_garbage() {
    let err = decode_label_png(b"not a png", Path::new("x.png")).unwrap_err();
    assert!(matches!(err, Error::Png { .. }), "{err}");
}

#[test]
fn export_and_reload_pseudo_labels() {
    let ds = synth(5, 3);
    let dir = tempfile::tempdir().unwrap();
    let rasters: Vec<(&str, &LabelRaster)> = ds
        .images()
        .iter()
        .map(|r| (r.id.as_str(), &r.gt.as_ref().unwrap().raster))
        .collect();
    let manifest = export_pseudo_labels(rasters.iter().copied(), dir.path(), "cfg-x").unwrap();
    let (back_manifest, back) = load_pseudo_labels(dir.path()).unwrap();
    assert_eq!(back_manifest, manifest);
    assert_eq!(manifest.config_fingerprint, "cfg-x");
    for ((id, r), (bid, br)) in rasters.iter().zip(&back) {
        assert_eq!(id, bid);
        assert_eq!(*r, br);
    }
    let r = LabelRaster::background(2, 2).unwrap();
    assert!(export_pseudo_labels([("../up", &r)], dir.path(), "c").is_err());
    assert!(export_pseudo_labels([("a", &r), ("a", &r)], dir.path(), "c").is_err());
}

#[test]
fn cache_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let key = ResultCache::key("sha256:ab", "cat . dog", "cfg-1");
    ResultCache::new(dir.path()).put(&key, b"payload").unwrap();
    let reopened = ResultCache::new(dir.path());
    assert_eq!(reopened.get(&key).unwrap().as_deref(), Some(&b"payload"[..]));
    assert_eq!(
        reopened
            .get(&ResultCache::key("sha256:ab", "cat . dog", "cfg-2"))
            .unwrap(),
        None
    );
}

fn sample_record() -> InterchangeRecord {
    let mut producer = Producer::default();
    producer.models.insert("detector".into(), "grounding".into());
    producer.version = "1".into();
    producer.prompt = "cat .".into();
    let mut rec = InterchangeRecord::new("img", 8, 6, producer);
    rec.classifier_scores.push(ScoreEntry {
        class_id: ClassId(8),
        score: 0.9,
    });
    let m = BitMask::from_fn(8, 6, |x, y| (2..5).contains(&x) && (1..4).contains(&y)).unwrap();
    rec.detections.push(DetectionEntry {
        label_text: "cat".into(),
        class_id: ClassId(8),
        bbox: [2, 1, 5, 4],
        score: 0.8,
        text_score: Some(0.7),
        candidates: vec![CandidateEntry {
            rle: RleJson::from(&rle_encode(&m)),
            proposal_score: 0.95,
        }],
    });
    rec
}

#[test]
fn interchange_roundtrip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let rec = sample_record();
    let path = interchange_path(dir.path(), "img");
    let hash = write_interchange(&rec, &path).unwrap();
    assert!(hash.starts_with("sha256:"));
    let back = read_interchange(&path).unwrap();
    assert_eq!(back.content_hash, hash);
    let mut unsealed = back.clone();
    unsealed.content_hash.clear();
    assert_eq!(unsealed, rec);

    let text = std::fs::read_to_string(&path).unwrap();
    let p = Path::new("t.json");
    assert!(matches!(parse_interchange(b"{ nope", p), Err(Error::Malformed { .. })));
    let v2 = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(matches!(
        parse_interchange(v2.as_bytes(), p),
        Err(Error::UnsupportedSchema { found: 2, .. })
    ));
    let tampered = text.replace("0.8", "0.6");
    assert!(matches!(
        parse_interchange(tampered.as_bytes(), p),
        Err(Error::HashMismatch { .. })
    ));
    let extra = text.replacen('{', "{\"surprise\": 1,", 1);
    assert!(matches!(
        parse_interchange(extra.as_bytes(), p),
        Err(Error::Malformed { .. })
    ));

    let mut bad = rec.clone();
    bad.detections[0].bbox = [2, 1, 9, 4];
    assert!(matches!(
        write_interchange(&bad, &path),
        Err(Error::InvalidRecord { detection: Some(0), .. })
    ));
    let mut bad = rec.clone();
    bad.detections[0].candidates[0].rle.size = [8, 6];
    assert!(matches!(bad.validate(None), Err(Error::InvalidRecord { .. })));
    let mut bad = rec;
    bad.classifier_scores[0].class_id = ClassId(0);
    assert!(bad.validate(None).is_err());
    assert!(sample_record()
        .validate(Some(&ClassTable::from_names(["background", "x"]).unwrap()))
        .is_err());
}

/// Dumps everything a backend would answer for each image into interchange
/// records.
fn record_backend(backend: &OracleBackend, ds: &DatasetIndex) -> Vec<InterchangeRecord> {
    let labels: Vec<ClassId> = ds.classes().foreground().collect();
    ds.images()
        .iter()
        .map(|img| {
            let mut rec = InterchangeRecord::new(img.id.clone(), img.width, img.height, Producer::default());
            for p in backend.classify(&img.id, ds.classes()).unwrap() {
                rec.classifier_scores.push(ScoreEntry {
                    class_id: p.class_id,
                    score: p.score,
                });
            }
            let mut dets = backend.detect(&img.id, &labels, 0.0, 0.0).unwrap();
            dets.sort_by_key(|d| d.id);
            for (i, d) in dets.iter().enumerate() {
                assert_eq!(d.id, i);
                let candidates = backend
                    .segment_in_box(&img.id, d)
                    .unwrap()
                    .into_iter()
                    .map(|c| CandidateEntry {
                        rle: RleJson::from(&c.mask),
                        proposal_score: c.proposal_score,
                    })
                    .collect();
                rec.detections.push(DetectionEntry {
                    label_text: d.label_text.clone(),
                    class_id: d.bbox.class_id(),
                    bbox: d.bbox.coords(),
                    score: d.bbox.score(),
                    text_score: Some(d.text_score),
                    candidates,
                });
            }
            rec
        })
        .collect()
}

#[test]
fn file_backend_replays_oracle() {
    let ds = Arc::new(synth(6, 6));
    let oracle = OracleBackend::new(Arc::clone(&ds), OracleNoise::preset("preset-mild", 6).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for rec in record_backend(&oracle, &ds) {
        write_interchange(&rec, &interchange_path(dir.path(), &rec.image_id)).unwrap();
    }
    let files = FileBackend::open(dir.path()).unwrap();
    files.validate_classes(ds.classes()).unwrap();
    assert_eq!(files.image_ids().count(), ds.len());

    let cfg = PipelineConfig::default();
    let expected = PseudoLabeler::new(&oracle, &ds, cfg.clone())
        .unwrap()
        .generate_all(Some(2))
        .unwrap();
    let replayed = PseudoLabeler::new(&files, &ds, cfg)
        .unwrap()
        .generate_all(Some(2))
        .unwrap();
    assert_eq!(expected, replayed);
}

#[test]
fn file_backend_requires_matching_names() {
    let dir = tempfile::tempdir().unwrap();
    write_interchange(&sample_record(), &dir.path().join("other.json")).unwrap();
    assert!(matches!(
        FileBackend::open(dir.path()),
        Err(Error::InvalidRecord { .. })
    ));
    let err = FileBackend::default().record("x").unwrap_err();
    assert!(matches!(err, Error::MissingRecord(_)));
}
