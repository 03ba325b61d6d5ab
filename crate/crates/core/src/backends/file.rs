use std::collections::BTreeMap;
use std::path::Path;

use super::{Backend, ClassPrediction, Classifier, Detection, Detector, MaskCandidate, Segmenter};
use crate::dataio::{read_interchange, ClassTable, InterchangeRecord};
use crate::error::{Error, Result};
use crate::maskgeom::{box_iou, ClassId};

/// IoU a detection must reach with a stored detection of its class to reuse
/// that detection's mask candidates (for boxes not produced by the detector,
/// such as ground-truth boxes).
const REUSE_IOU: f64 = 0.5;

/// Replays interchange records. Everything returned comes from a record.
#[derive(Clone, Debug, Default)]
pub struct FileBackend {
    records: BTreeMap<String, InterchangeRecord>,
}

impl FileBackend {
    /// Loads every `*.json` file in `dir`; each file must be named after the
    /// image id it holds.
    pub fn open(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                paths.push(path);
            }
        }
        paths.sort();
        let mut records = BTreeMap::new();
        for path in paths {
            let rec = read_interchange(&path)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if stem != rec.image_id {
                return Err(Error::InvalidRecord {
                    image_id: rec.image_id.clone(),
                    detection: None,
                    message: format!("stored in {}, expected {}.json", path.display(), rec.image_id),
                });
            }
            records.insert(rec.image_id.clone(), rec);
        }
        Ok(FileBackend { records })
    }

    /// Records must already carry valid content hashes.
    pub fn from_records(records: impl IntoIterator<Item = InterchangeRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for rec in records {
            rec.verify_hash()?;
            rec.validate(None)?;
            if map.contains_key(&rec.image_id) {
                return Err(Error::Dataset(format!("duplicate record for image {:?}", rec.image_id)));
            }
            map.insert(rec.image_id.clone(), rec);
        }
        Ok(FileBackend { records: map })
    }

    pub fn record(&self, image_id: &str) -> Result<&InterchangeRecord> {
        self.records
            .get(image_id)
            .ok_or_else(|| Error::MissingRecord(image_id.to_string()))
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Checks every record's class ids against `classes`.
    pub fn validate_classes(&self, classes: &ClassTable) -> Result<()> {
        self.records.values().try_for_each(|r| r.validate(Some(classes)))
    }

    fn stored_detection(&self, rec: &InterchangeRecord, det: &Detection) -> Result<Option<usize>> {
        if det.id < rec.detections.len() {
            let stored = rec.detection_box(det.id)?;
            if stored.coords() == det.bbox.coords() && stored.class_id() == det.bbox.class_id() {
                return Ok(Some(det.id));
            }
        }
        let mut best: Option<(f64, usize)> = None;
        for i in 0..rec.detections.len() {
            let stored = rec.detection_box(i)?;
            if stored.class_id() != det.bbox.class_id() {
                continue;
            }
            let iou = box_iou::<f64>(&stored, &det.bbox);
            if iou >= REUSE_IOU && best.is_none_or(|(b, _)| iou > b) {
                best = Some((iou, i));
            }
        }
        Ok(best.map(|(_, i)| i))
    }
}

impl Classifier for FileBackend {
    fn classify(&self, image_id: &str, _classes: &ClassTable) -> Result<Vec<ClassPrediction>> {
        Ok(self
            .record(image_id)?
            .classifier_scores
            .iter()
            .map(|s| ClassPrediction {
                class_id: s.class_id,
                score: s.score,
            })
            .collect())
    }
}

impl Detector for FileBackend {
    fn detect(
        &self,
        image_id: &str,
        labels: &[ClassId],
        box_threshold: f64,
        text_threshold: f64,
    ) -> Result<Vec<Detection>> {
        let rec = self.record(image_id)?;
        let mut out = Vec::new();
        for (i, d) in rec.detections.iter().enumerate() {
            let text_score = d.text_score.unwrap_or(d.score);
            if labels.contains(&d.class_id) && d.score >= box_threshold && text_score >= text_threshold {
                out.push(Detection {
                    id: i,
                    bbox: rec.detection_box(i)?,
                    label_text: d.label_text.clone(),
                    text_score,
                });
            }
        }
        Ok(out)
    }
}

impl Segmenter for FileBackend {
    fn segment_in_box(&self, image_id: &str, det: &Detection) -> Result<Vec<MaskCandidate>> {
        let rec = self.record(image_id)?;
        let Some(i) = self.stored_detection(rec, det)? else {
            return Ok(Vec::new());
        };
        rec.detections[i]
            .candidates
            .iter()
            .map(|c| {
                Ok(MaskCandidate {
                    mask: c.rle.to_rle()?,
                    proposal_score: c.proposal_score,
                    box_id: det.id,
                })
            })
            .collect()
    }
}

impl Backend for FileBackend {
    fn describe(&self) -> String {
        "files".to_string()
    }

    fn image_hash(&self, image_id: &str) -> Result<String> {
        Ok(self.record(image_id)?.content_hash.clone())
    }
}
