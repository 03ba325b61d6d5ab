//! Geometry and raster primitives: boxes, binary masks, the RLE codec,
//! overlap measures, clipping and union.
//!
//! Everything here is an immutable value type or a pure function.

mod bbox;
mod bitmask;
mod measure;
mod morph;
mod raster;
mod rle;

use serde::{Deserialize, Serialize};

pub use bbox::BBox;
pub use bitmask::BitMask;
pub use measure::{box_iou, clip_mask, containment, coverage, mask_iou, union_masks};
pub use morph::{components4, dilate4, erode4, morph4};
pub use raster::LabelRaster;
pub use rle::{rle_decode, rle_encode, RleMask};

/// 8-bit class index as stored in label rasters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u8);

impl ClassId {
    pub const BACKGROUND: ClassId = ClassId(0);
    pub const IGNORE: ClassId = ClassId(255);

    /// A class that may be painted into a pseudo-label.
    pub fn is_foreground(self) -> bool {
        self != Self::BACKGROUND && self != Self::IGNORE
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
