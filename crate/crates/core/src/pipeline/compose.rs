use std::cmp::Reverse;

use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::maskgeom::{morph4, BitMask, ClassId, LabelRaster};

/// One box's selected mask, already clipped to the box.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub mask: BitMask,
    pub class_id: ClassId,
    pub score: f64,
}

/// Paints selections onto an all-background raster. Lower priority paints
/// first: ascending score, then descending area, then descending class id,
/// so on overlap the highest score wins, then the smaller mask, then the
/// lower class id.
///
/// With `ignore_boundary_band = w > 0`, painted pixels that touch a
/// differently labeled 4-neighbor form the boundary; the boundary grown by
/// `w - 1` 4-neighborhood steps is set to ignore (255).
pub fn compose(dims: (u32, u32), selections: &[Selection], cfg: &PipelineConfig) -> Result<LabelRaster> {
    let (w, h) = dims;
    let mut raster = LabelRaster::background(w, h)?;
    for s in selections {
        if !s.class_id.is_foreground() {
            return Err(Error::InvalidLabel {
                value: s.class_id.0,
                context: "selection class must be in 1..=254".into(),
            });
        }
        if s.mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: s.mask.dims(),
            });
        }
    }
    let mut order: Vec<&Selection> = selections.iter().collect();
    order.sort_by_key(|s| (OrdScore(s.score), Reverse(s.mask.count_ones()), Reverse(s.class_id)));
    for s in order {
        raster.paint(&s.mask, s.class_id)?;
    }
    if cfg.ignore_boundary_band > 0 {
        let band = boundary(&raster);
        let band = morph4(&band, cfg.ignore_boundary_band as i32 - 1);
        raster.paint(&band, ClassId::IGNORE)?;
    }
    Ok(raster)
}

struct OrdScore(f64);
impl PartialEq for OrdScore {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for OrdScore {}
impl PartialOrd for OrdScore {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdScore {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn boundary(r: &LabelRaster) -> BitMask {
    let (w, h) = r.dims();
    BitMask::from_fn(w, h, |x, y| {
        let c = r.get(x, y);
        if c == ClassId::BACKGROUND {
            return false;
        }
        let differs = |nx: u32, ny: u32| r.get(nx, ny) != c;
        (x > 0 && differs(x - 1, y))
            || (x + 1 < w && differs(x + 1, y))
            || (y > 0 && differs(x, y - 1))
            || (y + 1 < h && differs(x, y + 1))
    })
    .expect("raster dims are nonzero")
}
