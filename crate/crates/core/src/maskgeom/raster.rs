use std::collections::BTreeSet;

use super::{BitMask, ClassId};
use crate::error::{Error, Result};

/// Per-pixel class indices, row-major. 0 is background, 255 is ignore.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LabelRaster {
    width: u32,
    height: u32,
    labels: Vec<u8>,
}

impl std::fmt::Debug for LabelRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LabelRaster({}x{}, classes {:?})",
            self.width,
            self.height,
            self.classes_present()
        )
    }
}

impl LabelRaster {
    pub fn filled(width: u32, height: u32, value: ClassId) -> Result<Self> {
        Self::from_vec(width, height, vec![value.0; width as usize * height as usize])
    }

    pub fn background(width: u32, height: u32) -> Result<Self> {
        Self::filled(width, height, ClassId::BACKGROUND)
    }

    pub fn from_vec(width: u32, height: u32, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (labels.len() as u32, 1),
            });
        }
        Ok(LabelRaster { width, height, labels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> ClassId {
        ClassId(self.labels[y as usize * self.width as usize + x as usize])
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: ClassId) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.labels[y as usize * self.width as usize + x as usize] = c.0;
    }

    /// Writes `c` at every set pixel of `m`.
    pub fn paint(&mut self, m: &BitMask, c: ClassId) -> Result<()> {
        if m.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: m.dims(),
            });
        }
        for (x, y) in m.iter_ones() {
            self.set(x, y, c);
        }
        Ok(())
    }

    pub fn mask_of(&self, c: ClassId) -> BitMask {
        BitMask::from_fn(self.width, self.height, |x, y| self.get(x, y) == c).expect("raster dims are nonzero")
    }

    /// Foreground classes present, excluding background and ignore.
    pub fn classes_present(&self) -> BTreeSet<ClassId> {
        let mut seen = [false; 256];
        for &v in &self.labels {
            seen[v as usize] = true;
        }
        (1..255u8).filter(|&v| seen[v as usize]).map(ClassId).collect()
    }

    /// Distinct values present, including 0 and 255.
    pub fn values_present(&self) -> BTreeSet<u8> {
        self.labels.iter().copied().collect()
    }
}
