use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Where the image labels or the boxes come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Predicted,
    GroundTruth,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" | "pred" => Ok(Source::Predicted),
            "ground_truth" | "gt" => Ok(Source::GroundTruth),
            _ => Err(Error::Config(format!(
                "unknown source {s:?} (expected predicted or ground_truth)"
            ))),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Predicted => "predicted",
            Source::GroundTruth => "ground_truth",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Maximum number of image labels kept from the classifier.
    pub top_n: usize,
    pub cls_score_min: f64,
    pub box_threshold: f64,
    pub text_threshold: f64,
    /// Same-class detections overlapping a kept one by more than this are
    /// suppressed.
    pub nms_iou: f64,
    /// Candidates with less of their area inside the box are discarded.
    pub containment_min: f64,
    /// A top-ranked candidate covering at least this much of the box is
    /// taken alone.
    pub whole_coverage_min: f64,
    /// Minimum new in-box pixels, as a fraction of box area, for a further
    /// candidate to join the union.
    pub union_gain_min: f64,
    pub labels_source: Source,
    pub boxes_source: Source,
    /// Width in pixels of the ignore band drawn along painted region
    /// boundaries; 0 disables it.
    pub ignore_boundary_band: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            top_n: 3,
            cls_score_min: 0.5,
            box_threshold: 0.35,
            text_threshold: 0.25,
            nms_iou: 0.3,
            containment_min: 0.85,
            whole_coverage_min: 0.5,
            union_gain_min: 0.01,
            labels_source: Source::Predicted,
            boxes_source: Source::Predicted,
            ignore_boundary_band: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n < 1 {
            return Err(Error::Config("top_n must be at least 1".into()));
        }
        for (name, v) in self.thresholds() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0,1]")));
            }
        }
        Ok(())
    }

    fn thresholds(&self) -> [(&'static str, f64); 7] {
        [
            ("cls_score_min", self.cls_score_min),
            ("box_threshold", self.box_threshold),
            ("text_threshold", self.text_threshold),
            ("nms_iou", self.nms_iou),
            ("containment_min", self.containment_min),
            ("whole_coverage_min", self.whole_coverage_min),
            ("union_gain_min", self.union_gain_min),
        ]
    }

    /// `key=value` pairs sorted by key and joined with `;`. Floats use the
    /// shortest representation that round-trips.
    pub fn canonical_string(&self) -> String {
        let mut pairs: Vec<(&str, String)> = self.thresholds().iter().map(|&(k, v)| (k, format!("{v:?}"))).collect();
        pairs.push(("top_n", self.top_n.to_string()));
        pairs.push(("labels_source", self.labels_source.to_string()));
        pairs.push(("boxes_source", self.boxes_source.to_string()));
        pairs.push(("ignore_boundary_band", self.ignore_boundary_band.to_string()));
        pairs.sort();
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Short stable identifier of the canonical string.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(format!("pipeline/v1;{}", self.canonical_string()));
        format!("cfg-{}", &hex::encode(digest)[..16])
    }
}
