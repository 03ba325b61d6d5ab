//! Interchange records: the file boundary through which classifier,
//! detector and segmenter outputs reach the engine.
//!
//! One JSON file per image, `<image_id>.json`. `content_hash` is
//! `sha256:<hex>` over the compact JSON serialization of the record with
//! `content_hash` set to the empty string.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_atomic, ClassTable};
use crate::error::{Error, Result};
use crate::maskgeom::{BBox, ClassId, RleMask};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterchangeRecord {
    pub schema_version: u64,
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub classifier_scores: Vec<ScoreEntry>,
    pub detections: Vec<DetectionEntry>,
    pub producer: Producer,
    #[serde(default)]
    pub content_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreEntry {
    pub class_id: ClassId,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionEntry {
    pub label_text: String,
    pub class_id: ClassId,
    /// `[x0, y0, x1, y1]`, half-open pixels.
    #[serde(rename = "box")]
    pub bbox: [u32; 4],
    pub score: f64,
    /// Phrase-grounding confidence; absent means equal to `score`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_score: Option<f64>,
    pub candidates: Vec<CandidateEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub rle: RleJson,
    pub proposal_score: f64,
}

/// COCO uncompressed RLE: `size` is `[height, width]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleJson {
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl From<&RleMask> for RleJson {
    fn from(r: &RleMask) -> Self {
        RleJson {
            size: [r.height(), r.width()],
            counts: r.counts().to_vec(),
        }
    }
}

impl RleJson {
    pub fn to_rle(&self) -> Result<RleMask> {
        RleMask::new(self.size[1], self.size[0], self.counts.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Producer {
    /// Model identifier per role (`classifier`, `detector`, `segmenter`).
    pub models: BTreeMap<String, String>,
    pub version: String,
    pub prompt: String,
}

impl InterchangeRecord {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32, producer: Producer) -> Self {
        InterchangeRecord {
            schema_version: SCHEMA_VERSION,
            image_id: image_id.into(),
            width,
            height,
            classifier_scores: Vec::new(),
            detections: Vec::new(),
            producer,
            content_hash: String::new(),
        }
    }

    pub fn compute_hash(&self) -> String {
        let mut unhashed = self.clone();
        unhashed.content_hash.clear();
        let bytes = serde_json::to_vec(&unhashed).expect("record serializes");
        format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
    }

    /// Stores the current content hash.
    pub fn seal(&mut self) {
        self.content_hash = self.compute_hash();
    }

    pub fn verify_hash(&self) -> Result<()> {
        let computed = self.compute_hash();
        if computed != self.content_hash {
            return Err(Error::HashMismatch {
                image_id: self.image_id.clone(),
                stored: self.content_hash.clone(),
                computed,
            });
        }
        Ok(())
    }

    /// Structural checks; with a class table, also checks class ids exist.
    pub fn validate(&self, classes: Option<&ClassTable>) -> Result<()> {
        let invalid = |detection: Option<usize>, message: String| Error::InvalidRecord {
            image_id: self.image_id.clone(),
            detection,
            message,
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema {
                found: self.schema_version,
                supported: SCHEMA_VERSION,
            });
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid(None, format!("image size {}x{}", self.width, self.height)));
        }
        let check_class = |c: ClassId, det: Option<usize>| -> Result<()> {
            if !c.is_foreground() {
                return Err(invalid(det, format!("class id {c} is reserved")));
            }
            if let Some(t) = classes {
                if !t.contains(c) {
                    return Err(invalid(det, format!("class id {c} not in class table")));
                }
            }
            Ok(())
        };
        for s in &self.classifier_scores {
            check_class(s.class_id, None)?;
            if !(0.0..=1.0).contains(&s.score) {
                return Err(invalid(
                    None,
                    format!("classifier score {} for class {}", s.score, s.class_id),
                ));
            }
        }
        for (i, d) in self.detections.iter().enumerate() {
            check_class(d.class_id, Some(i))?;
            for s in [Some(d.score), d.text_score].into_iter().flatten() {
                if !(0.0..=1.0).contains(&s) {
                    return Err(invalid(Some(i), format!("score {s} outside [0,1]")));
                }
            }
            let b = self.detection_box(i).map_err(|e| invalid(Some(i), e.to_string()))?;
            if !b.fits_in(self.width, self.height) {
                return Err(invalid(Some(i), format!("box {:?} exceeds image", d.bbox)));
            }
            for (j, c) in d.candidates.iter().enumerate() {
                if c.rle.size != [self.height, self.width] {
                    return Err(invalid(
                        Some(i),
                        format!(
                            "candidate {j}: mask size {:?}, image is [{}, {}]",
                            c.rle.size, self.height, self.width
                        ),
                    ));
                }
                c.rle
                    .to_rle()
                    .map_err(|e| invalid(Some(i), format!("candidate {j}: {e}")))?;
                if !(0.0..=1.0).contains(&c.proposal_score) {
                    return Err(invalid(
                        Some(i),
                        format!("candidate {j}: proposal score {}", c.proposal_score),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn detection_box(&self, index: usize) -> Result<BBox> {
        let d = &self.detections[index];
        let [x0, y0, x1, y1] = d.bbox;
        BBox::new(x0, y0, x1, y1, d.class_id, d.score)
    }
}

pub fn interchange_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.json"))
}

/// Parses, then checks schema version, hash and structure, in that order.
pub fn parse_interchange(bytes: &[u8], path: &Path) -> Result<InterchangeRecord> {
    let malformed = |message: String| Error::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| malformed("missing schema_version".into()))?
        .as_u64()
        .ok_or_else(|| malformed("schema_version is not an unsigned integer".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema {
            found: version,
            supported: SCHEMA_VERSION,
        });
    }
    let rec: InterchangeRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    rec.verify_hash()?;
    rec.validate(None)?;
    Ok(rec)
}

pub fn read_interchange(path: &Path) -> Result<InterchangeRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_interchange(&bytes, path)
}

/// Validates `rec`, refreshes its content hash and writes it atomically.
/// Returns the written hash.
pub fn write_interchange(rec: &InterchangeRecord, path: &Path) -> Result<String> {
    rec.validate(None)?;
    let mut sealed = rec.clone();
    sealed.seal();
    let mut bytes = serde_json::to_vec_pretty(&sealed).expect("record serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(sealed.content_hash)
}
