//! Pseudo-label and component quality: per-class IoU and mIoU over a
//! dataset, classification and detection AP, and supervision ablations.

mod ablation;
mod ap;
mod miou;
mod report;

pub use ablation::{ablation_report, render_ablation, supervision_configs, AblationRow};
pub use ap::{ap_classification, ap_detection, average_precision, ApSummary, ClassScore, ImageBox, DEFAULT_MATCH_IOU};
pub use miou::{miou, ClassCounts, Confusion};
pub use report::{round_sig9, EvalReport};

use std::collections::BTreeMap;

use crate::dataio::DatasetIndex;
use crate::error::{Error, Result};
use crate::maskgeom::LabelRaster;
use crate::scalar::Scalar;

/// mIoU of predictions keyed by image id against a dataset's ground truth.
/// Every dataset image needs exactly one prediction and no extra ids are
/// allowed. Accumulation is per image, in parallel, then merged.
pub fn dataset_miou<'a, T: Scalar>(
    dataset: &DatasetIndex,
    preds: impl IntoIterator<Item = (&'a str, &'a LabelRaster)>,
) -> Result<EvalReport<T>> {
    use rayon::prelude::*;

    let mut by_id: BTreeMap<&str, &LabelRaster> = BTreeMap::new();
    for (id, r) in preds {
        if by_id.insert(id, r).is_some() {
            return Err(Error::Dataset(format!("duplicate prediction for image {id:?}")));
        }
    }
    let num_classes = dataset.classes().len();
    let identity = Confusion::new(num_classes)?;
    for id in by_id.keys() {
        dataset.get(id)?;
    }
    let pairs = dataset
        .ids()
        .map(|id| {
            let pred = by_id
                .get(id)
                .ok_or_else(|| Error::Dataset(format!("no prediction for image {id:?}")))?;
            Ok((*pred, &dataset.ground_truth(id)?.raster))
        })
        .collect::<Result<Vec<_>>>()?;
    let acc = pairs
        .par_iter()
        .map(|(p, g)| {
            let mut c = Confusion::new(num_classes)?;
            c.add(p, g)?;
            Ok(c)
        })
        .try_reduce(|| identity.clone(), |a, b| a.merge(&b))?;
    EvalReport::from_confusion(&acc, pairs.len())
}
