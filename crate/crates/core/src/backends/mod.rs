//! The three model roles (image classifier, grounded detector, box-prompted
//! segmenter) behind one contract, with two implementations: replay of
//! interchange files and a seeded oracle built from ground truth.
//!
//! Real model inference never runs in this crate; it reaches the engine only
//! as interchange files.

mod file;
mod oracle;

use serde::Serialize;

pub use file::FileBackend;
pub use oracle::{noise_rng, OracleBackend, OracleNoise};

use crate::dataio::ClassTable;
use crate::error::Result;
use crate::maskgeom::{BBox, ClassId, RleMask};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassPrediction {
    pub class_id: ClassId,
    /// Independent per class; scores need not sum to 1.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detection {
    /// Backend-local id, stable per image; mask candidates refer to it.
    pub id: usize,
    /// Carries the class and detection score.
    pub bbox: BBox,
    pub label_text: String,
    pub text_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskCandidate {
    pub mask: RleMask,
    pub proposal_score: f64,
    /// Id of the prompting [`Detection`].
    pub box_id: usize,
}

pub trait Classifier {
    /// Scores for the foreground classes of `classes`, in no particular order.
    fn classify(&self, image_id: &str, classes: &ClassTable) -> Result<Vec<ClassPrediction>>;
}

pub trait Detector {
    /// Detections of the requested classes whose box score is at least
    /// `box_threshold` and text score at least `text_threshold`.
    fn detect(
        &self,
        image_id: &str,
        labels: &[ClassId],
        box_threshold: f64,
        text_threshold: f64,
    ) -> Result<Vec<Detection>>;
}

pub trait Segmenter {
    /// Mask proposals prompted by `det`; may be empty.
    fn segment_in_box(&self, image_id: &str, det: &Detection) -> Result<Vec<MaskCandidate>>;
}

/// All three roles, shareable across worker threads.
pub trait Backend: Classifier + Detector + Segmenter + Send + Sync {
    /// Identity of the backend and its parameters, used in cache keys.
    fn describe(&self) -> String;

    /// Hash of the inputs this backend holds for one image.
    fn image_hash(&self, image_id: &str) -> Result<String>;
}
