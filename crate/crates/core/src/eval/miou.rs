use std::collections::BTreeMap;

use serde::Serialize;

use super::EvalReport;
use crate::error::{Error, Result};
use crate::maskgeom::{ClassId, LabelRaster};
use crate::scalar::{mean, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub intersection: u64,
    pub union: u64,
    pub pred_count: u64,
    pub gt_count: u64,
}

impl std::ops::AddAssign for ClassCounts {
    fn add_assign(&mut self, o: Self) {
        self.intersection += o.intersection;
        self.union += o.union;
        self.pred_count += o.pred_count;
        self.gt_count += o.gt_count;
    }
}

/// Dataset-level per-class pixel counts. Pixels whose ground truth is 255
/// are skipped entirely; a predicted 255 counts as predicting no class.
/// Accumulators merge associatively and commutatively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Confusion {
    counts: Vec<ClassCounts>,
}

impl Confusion {
    pub fn new(num_classes: usize) -> Result<Self> {
        if !(2..=255).contains(&num_classes) {
            return Err(Error::Config(format!("num_classes = {num_classes}, expected 2..=255")));
        }
        Ok(Confusion {
            counts: vec![ClassCounts::default(); num_classes],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, pred: &LabelRaster, gt: &LabelRaster) -> Result<()> {
        if pred.dims() != gt.dims() {
            return Err(Error::DimensionMismatch {
                expected: gt.dims(),
                found: pred.dims(),
            });
        }
        let n = self.counts.len();
        let ignore = ClassId::IGNORE.0;
        for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
            if g == ignore {
                continue;
            }
            if g as usize >= n {
                return Err(Error::InvalidLabel {
                    value: g,
                    context: format!("ground truth; only {n} classes"),
                });
            }
            if p != ignore && p as usize >= n {
                return Err(Error::InvalidLabel {
                    value: p,
                    context: format!("prediction; only {n} classes"),
                });
            }
            let gc = &mut self.counts[g as usize];
            gc.gt_count += 1;
            gc.union += 1;
            if p == g {
                gc.intersection += 1;
                gc.pred_count += 1;
            } else if p != ignore {
                let pc = &mut self.counts[p as usize];
                pc.pred_count += 1;
                pc.union += 1;
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: &Confusion) -> Result<Self> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::Config("merging accumulators with different class counts".into()));
        }
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(self)
    }

    pub fn counts(&self) -> BTreeMap<ClassId, ClassCounts> {
        self.counts
            .iter()
            .enumerate()
            .map(|(c, &k)| (ClassId(c as u8), k))
            .collect()
    }

    /// IoU of every class with a nonempty union.
    pub fn per_class_iou<T: Scalar>(&self) -> BTreeMap<ClassId, T> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, k)| k.union > 0)
            .map(|(c, k)| (ClassId(c as u8), T::ratio(k.intersection, k.union)))
            .collect()
    }

    /// Mean IoU over classes present in prediction or ground truth; `None`
    /// when no pixel was counted.
    pub fn miou<T: Scalar>(&self) -> Option<T> {
        mean(self.per_class_iou::<T>().into_values())
    }
}

/// Per-class IoU and mIoU over a whole dataset, background included.
pub fn miou<T: Scalar>(preds: &[LabelRaster], gts: &[LabelRaster], num_classes: usize) -> Result<EvalReport<T>> {
    if preds.len() != gts.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} ground-truth rasters",
            preds.len(),
            gts.len()
        )));
    }
    let mut acc = Confusion::new(num_classes)?;
    for (p, g) in preds.iter().zip(gts) {
        acc.add(p, g)?;
    }
    EvalReport::from_confusion(&acc, preds.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn raster(w: u32, h: u32, f: impl Fn(u32, u32) -> u8) -> LabelRaster {
        let v = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        LabelRaster::from_vec(w, h, v).unwrap()
    }

    #[test]
    fn hand_case_four_by_four() {
        let gt = raster(4, 4, |x, _| (x < 2) as u8);
        let pred = raster(4, 4, |_, y| (y < 2) as u8);
        let r = miou::<Exact>(std::slice::from_ref(&pred), std::slice::from_ref(&gt), 2).unwrap();
        assert_eq!(r.per_class_iou[&ClassId(1)], Exact::new(1, 3));
        assert_eq!(r.per_class_iou[&ClassId(0)], Exact::new(1, 3));
        assert_eq!(r.miou, Exact::new(1, 3));
        let f = miou::<f64>(&[pred], &[gt], 2).unwrap();
        assert!((f.miou - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rasters_score_one() {
        let a = raster(5, 3, |x, y| ((x + y) % 3) as u8);
        let r = miou::<f64>(&[a.clone(), a.clone()], &[a.clone(), a], 3).unwrap();
        assert_eq!(r.miou, 1.0);
        assert_eq!(r.image_count, 2);
    }

    #[test]
    fn ignore_pixels_match_deleting_them() {
        // Ignoring the last column equals evaluating the 3-column crop.
        let gt = raster(4, 4, |x, y| if x == 3 { 255 } else { ((x + y) % 2) as u8 });
        let pred = raster(4, 4, |x, y| if x == 3 { 1 } else { (y % 2) as u8 });
        let gt_crop = raster(3, 4, |x, y| ((x + y) % 2) as u8);
        let pred_crop = raster(3, 4, |_, y| (y % 2) as u8);
        let full = miou::<Exact>(&[pred], &[gt], 2).unwrap();
        let crop = miou::<Exact>(&[pred_crop], &[gt_crop], 2).unwrap();
        assert_eq!(full.per_class_iou, crop.per_class_iou);
        assert_eq!(full.confusion, crop.confusion);
    }

    #[test]
    fn absent_classes_are_excluded() {
        let gt = raster(2, 1, |_, _| 0);
        let r = miou::<f64>(std::slice::from_ref(&gt), std::slice::from_ref(&gt), 5).unwrap();
        assert_eq!(r.per_class_iou.len(), 1);
        assert_eq!(r.miou, 1.0);
    }

    #[test]
    fn errors() {
        let a = raster(2, 2, |_, _| 0);
        let b = raster(2, 3, |_, _| 0);
        assert!(matches!(
            miou::<f64>(std::slice::from_ref(&a), &[b], 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(miou::<f64>(std::slice::from_ref(&a), std::slice::from_ref(&a), 1).is_err());
        let out_of_range = raster(2, 2, |_, _| 7);
        assert!(matches!(
            miou::<f64>(&[out_of_range], std::slice::from_ref(&a), 2),
            Err(Error::InvalidLabel { value: 7, .. })
        ));
        assert!(miou::<f64>(std::slice::from_ref(&a), &[], 2).is_err());
    }
}
