use super::BitMask;
use crate::error::{Error, Result};

/// Uncompressed COCO-style run-length encoding.
///
/// Runs alternate 0s and 1s over pixels in column-major order (all of column
/// 0 top to bottom, then column 1, ...). The first run counts zeros and may
/// be empty; no other run may be empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RleMask {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl RleMask {
    pub fn new(width: u32, height: u32, counts: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRle(format!("zero dimension {width}x{height}")));
        }
        if let Some(i) = counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::InvalidRle(format!("zero-length run at index {}", i + 1)));
        }
        let sum: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = width as u64 * height as u64;
        if sum != expected {
            return Err(Error::InvalidRle(format!(
                "run lengths sum to {sum}, expected {width}x{height} = {expected}"
            )));
        }
        Ok(RleMask { width, height, counts })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of set pixels, read directly from the odd runs.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }
}

pub fn rle_encode(m: &BitMask) -> RleMask {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..m.width() {
        for y in 0..m.height() {
            let v = m.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        width: m.width(),
        height: m.height(),
        counts,
    }
}

pub fn rle_decode(r: &RleMask) -> Result<BitMask> {
    // Re-validate: fields are private, but this keeps decode total over
    // anything that reached an RleMask.
    let r = RleMask::new(r.width, r.height, r.counts.clone())?;
    let mut m = BitMask::new(r.width, r.height)?;
    let h = r.height as u64;
    let mut pos = 0u64;
    for (i, &c) in r.counts.iter().enumerate() {
        if i % 2 == 1 {
            for p in pos..pos + c as u64 {
                m.set((p / h) as u32, (p % h) as u32, true);
            }
        }
        pos += c as u64;
    }
    Ok(m)
}
