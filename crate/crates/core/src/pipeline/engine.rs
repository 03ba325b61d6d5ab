use rayon::prelude::*;
use serde::Serialize;

use super::{compose, nms_per_class, select_in_box, select_labels, PipelineConfig, Selection, SelectionTrace, Source};
use crate::backends::{Backend, Detection};
use crate::dataio::DatasetIndex;
use crate::error::{Error, Result};
use crate::maskgeom::{ClassId, LabelRaster};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxTrace {
    pub detection_id: usize,
    pub label_text: String,
    #[serde(flatten)]
    pub selection: SelectionTrace,
}

/// Output of the pipeline for one image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Generated {
    pub image_id: String,
    #[serde(skip)]
    pub raster: LabelRaster,
    pub labels: Vec<ClassId>,
    pub boxes: Vec<BoxTrace>,
}

/// Runs label selection, detection with NMS, in-box mask selection and
/// compositing for the images of a dataset.
pub struct PseudoLabeler<'a, B: Backend + ?Sized> {
    backend: &'a B,
    dataset: &'a DatasetIndex,
    cfg: PipelineConfig,
}

impl<'a, B: Backend + ?Sized> PseudoLabeler<'a, B> {
    pub fn new(backend: &'a B, dataset: &'a DatasetIndex, cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PseudoLabeler { backend, dataset, cfg })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    fn image_labels(&self, image_id: &str) -> Result<Vec<ClassId>> {
        match self.cfg.labels_source {
            Source::Predicted => {
                let preds = self.backend.classify(image_id, self.dataset.classes())?;
                Ok(select_labels(&preds, &self.cfg))
            }
            Source::GroundTruth => Ok(self
                .dataset
                .ground_truth(image_id)?
                .image_labels()
                .into_iter()
                .collect()),
        }
    }

    fn detections(&self, image_id: &str, labels: &[ClassId], dims: (u32, u32)) -> Result<Vec<Detection>> {
        if labels.is_empty() {
            return Ok(Vec::new());
        }
        match self.cfg.boxes_source {
            Source::Predicted => {
                let raw = self
                    .backend
                    .detect(image_id, labels, self.cfg.box_threshold, self.cfg.text_threshold)?;
                let clamped: Vec<Detection> = raw
                    .into_iter()
                    .filter_map(|d| {
                        let bbox = d.bbox.clamp_to(dims.0, dims.1)?;
                        Some(Detection { bbox, ..d })
                    })
                    .collect();
                Ok(nms_per_class(&clamped, self.cfg.nms_iou))
            }
            // Ground-truth boxes are exact; they bypass NMS.
            Source::GroundTruth => {
                let gt = self.dataset.ground_truth(image_id)?;
                let classes = self.dataset.classes();
                Ok(gt
                    .instances
                    .iter()
                    .enumerate()
                    .filter(|(_, inst)| labels.contains(&inst.class_id))
                    .map(|(i, inst)| Detection {
                        id: i,
                        bbox: inst.bbox,
                        label_text: classes.name(inst.class_id).unwrap_or_default().to_string(),
                        text_score: 1.0,
                    })
                    .collect())
            }
        }
    }

    pub fn generate(&self, image_id: &str) -> Result<Generated> {
        let rec = self.dataset.get(image_id)?;
        let dims = (rec.width, rec.height);
        let labels = self.image_labels(image_id)?;
        let dets = self.detections(image_id, &labels, dims)?;
        let mut selections = Vec::with_capacity(dets.len());
        let mut boxes = Vec::with_capacity(dets.len());
        for det in dets {
            let cands = self.backend.segment_in_box(image_id, &det)?;
            let (mask, selection) = select_in_box(&cands, &det.bbox, dims, &self.cfg).map_err(|e| match e {
                Error::DimensionMismatch { .. } => Error::InvalidRecord {
                    image_id: image_id.to_string(),
                    detection: Some(det.id),
                    message: e.to_string(),
                },
                other => other,
            })?;
            if !mask.is_empty() {
                selections.push(Selection {
                    mask,
                    class_id: det.bbox.class_id(),
                    score: det.bbox.score(),
                });
            }
            boxes.push(BoxTrace {
                detection_id: det.id,
                label_text: det.label_text,
                selection,
            });
        }
        let raster = compose(dims, &selections, &self.cfg)?;
        Ok(Generated {
            image_id: image_id.to_string(),
            raster,
            labels,
            boxes,
        })
    }

    /// Every image of the dataset, in image id order. `jobs` sizes the worker
    /// pool; `None` uses the global pool.
    pub fn generate_all(&self, jobs: Option<usize>) -> Result<Vec<Generated>> {
        let ids: Vec<&str> = self.dataset.ids().collect();
        let run = || ids.par_iter().map(|id| self.generate(id)).collect::<Result<Vec<_>>>();
        match jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
}
