//! Average precision for the classifier (multi-label, per image) and the
//! detector (per box, greedy IoU matching).
//!
//! AP is the all-points sum over the ranked list: every true positive at
//! rank `i` adds `(1 / positives) * precision@i`. No precision envelope is
//! applied.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::maskgeom::{box_iou, BBox, ClassId};
use crate::scalar::{mean, Scalar};

/// Default IoU for a detection to match a ground-truth box.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApSummary<T> {
    /// Classes with at least one positive.
    pub per_class: BTreeMap<ClassId, T>,
    /// Mean over `per_class`; `None` when no class has a positive.
    pub map: Option<T>,
}

impl<T: Scalar> ApSummary<T> {
    fn from_per_class(per_class: BTreeMap<ClassId, T>) -> Self {
        let map = mean(per_class.values().copied());
        ApSummary { per_class, map }
    }
}

/// AP of a ranked hit list against `positives` total positives (which may
/// exceed the hits when some positives were never retrieved).
pub fn average_precision<T: Scalar>(ranked_hits: &[bool], positives: u64) -> T {
    if positives == 0 {
        return T::zero();
    }
    let mut tp = 0u64;
    let mut ap = T::zero();
    for (i, &hit) in ranked_hits.iter().enumerate() {
        if hit {
            tp += 1;
            ap = ap + T::ratio(tp, (i as u64 + 1) * positives);
        }
    }
    ap
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassScore {
    pub image_id: String,
    pub class_id: ClassId,
    pub score: f64,
}

/// Multi-label classification AP. For each class, images are ranked by
/// descending score with ties broken by ascending image id; an image is a
/// positive when `gt_labels` lists the class for it.
pub fn ap_classification<T: Scalar>(
    scores: &[ClassScore],
    gt_labels: &BTreeMap<String, BTreeSet<ClassId>>,
) -> ApSummary<T> {
    let mut by_class: BTreeMap<ClassId, Vec<&ClassScore>> = BTreeMap::new();
    for s in scores {
        by_class.entry(s.class_id).or_default().push(s);
    }
    let mut positives: BTreeMap<ClassId, u64> = BTreeMap::new();
    for labels in gt_labels.values() {
        for &c in labels {
            *positives.entry(c).or_default() += 1;
        }
    }
    let mut per_class = BTreeMap::new();
    for (&c, &npos) in &positives {
        let mut ranked = by_class.remove(&c).unwrap_or_default();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.image_id.cmp(&b.image_id)));
        let hits: Vec<bool> = ranked
            .iter()
            .map(|s| gt_labels.get(&s.image_id).is_some_and(|l| l.contains(&c)))
            .collect();
        per_class.insert(c, average_precision(&hits, npos));
    }
    ApSummary::from_per_class(per_class)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageBox {
    pub image_id: String,
    /// Class and, for detections, score.
    pub bbox: BBox,
}

/// Detection AP. Per class, detections are taken in descending score order
/// (ties: image id, then box coordinates, then input order); each one
/// matches the still-unmatched ground-truth box of its image with the
/// highest IoU, if that IoU is at least `iou_match` (ties to the earlier
/// box). Unmatched detections are false positives.
pub fn ap_detection<T: Scalar>(dets: &[ImageBox], gts: &[ImageBox], iou_match: f64) -> ApSummary<T> {
    let mut positives: BTreeMap<ClassId, u64> = BTreeMap::new();
    for g in gts {
        *positives.entry(g.bbox.class_id()).or_default() += 1;
    }
    let mut per_class = BTreeMap::new();
    for (&c, &npos) in &positives {
        let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].bbox.class_id() == c).collect();
        order.sort_by(|&a, &b| {
            let (da, db) = (&dets[a], &dets[b]);
            db.bbox
                .score()
                .total_cmp(&da.bbox.score())
                .then_with(|| da.image_id.cmp(&db.image_id))
                .then(da.bbox.coords().cmp(&db.bbox.coords()))
                .then(a.cmp(&b))
        });
        let class_gts: Vec<&ImageBox> = gts.iter().filter(|g| g.bbox.class_id() == c).collect();
        let mut matched = vec![false; class_gts.len()];
        let mut hits = Vec::with_capacity(order.len());
        for i in order {
            let d = &dets[i];
            let mut best: Option<(f64, usize)> = None;
            for (j, g) in class_gts.iter().enumerate() {
                if matched[j] || g.image_id != d.image_id {
                    continue;
                }
                let iou = box_iou::<f64>(&d.bbox, &g.bbox);
                if iou >= iou_match && best.is_none_or(|(b, _)| iou > b) {
                    best = Some((iou, j));
                }
            }
            if let Some((_, j)) = best {
                matched[j] = true;
            }
            hits.push(best.is_some());
        }
        per_class.insert(c, average_precision(&hits, npos));
    }
    ApSummary::from_per_class(per_class)
}
