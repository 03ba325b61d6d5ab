use std::cmp::Ordering;

use super::PipelineConfig;
use crate::backends::{ClassPrediction, Detection};
use crate::maskgeom::{box_iou, ClassId};

/// Up to `top_n` classes scoring at least `cls_score_min`, by descending
/// score, ties to the lower class id.
pub fn select_labels(preds: &[ClassPrediction], cfg: &PipelineConfig) -> Vec<ClassId> {
    let mut passing: Vec<&ClassPrediction> = preds
        .iter()
        .filter(|p| p.class_id.is_foreground() && p.score >= cfg.cls_score_min)
        .collect();
    passing.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.class_id.cmp(&b.class_id)));
    let mut out: Vec<ClassId> = Vec::with_capacity(cfg.top_n);
    for p in passing {
        if out.len() == cfg.top_n {
            break;
        }
        if !out.contains(&p.class_id) {
            out.push(p.class_id);
        }
    }
    out
}

/// Priority used by NMS and for output order: higher score, then smaller
/// area, then lexicographically smaller coordinates, then class and id.
pub(crate) fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.bbox
        .score()
        .total_cmp(&a.bbox.score())
        .then(a.bbox.area().cmp(&b.bbox.area()))
        .then(a.bbox.coords().cmp(&b.bbox.coords()))
        .then(a.bbox.class_id().cmp(&b.bbox.class_id()))
        .then(a.id.cmp(&b.id))
}

/// Greedy non-maximum suppression run independently per class. A detection
/// is dropped when its IoU with an already kept detection of the same class
/// exceeds `nms_iou`. Output is in descending score order.
pub fn nms_per_class(dets: &[Detection], nms_iou: f64) -> Vec<Detection> {
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| detection_order(a, b));
    let mut kept: Vec<Detection> = Vec::new();
    for d in order {
        let suppressed = kept
            .iter()
            .any(|k| k.bbox.class_id() == d.bbox.class_id() && box_iou::<f64>(&k.bbox, &d.bbox) > nms_iou);
        if !suppressed {
            kept.push(d.clone());
        }
    }
    kept
}
