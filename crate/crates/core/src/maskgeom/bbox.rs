use serde::Serialize;

use super::ClassId;
use crate::error::{Error, Result};

/// Half-open integer pixel rectangle `[x0, x1) × [y0, y1)` with a class label
/// and a confidence score. Always non-empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BBox {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    class_id: ClassId,
    score: f64,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32, class_id: ClassId, score: f64) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidBox(format!("empty extent [{x0},{x1})x[{y0},{y1})")));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidBox(format!("score {score} outside [0,1]")));
        }
        Ok(BBox {
            x0,
            y0,
            x1,
            y1,
            class_id,
            score,
        })
    }

    /// Builds a box from possibly unordered, out-of-image real coordinates:
    /// rounds, re-orders, clamps to `width × height` and widens a collapsed
    /// side to one pixel.
    pub fn from_corners_clamped(
        [xa, ya, xb, yb]: [f64; 4],
        (width, height): (u32, u32),
        class_id: ClassId,
        score: f64,
    ) -> Result<Self> {
        let (x0, x1) = clamp_span(xa, xb, width);
        let (y0, y1) = clamp_span(ya, yb, height);
        BBox::new(x0, y0, x1, y1, class_id, score)
    }

    pub fn x0(&self) -> u32 {
        self.x0
    }
    pub fn y0(&self) -> u32 {
        self.y0
    }
    pub fn x1(&self) -> u32 {
        self.x1
    }
    pub fn y1(&self) -> u32 {
        self.y1
    }
    pub fn class_id(&self) -> ClassId {
        self.class_id
    }
    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn coords(&self) -> [u32; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn with_score(mut self, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidBox(format!("score {score} outside [0,1]")));
        }
        self.score = score;
        Ok(self)
    }

    pub fn with_class(mut self, class_id: ClassId) -> Self {
        self.class_id = class_id;
        self
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let w = self.x1.min(other.x1).saturating_sub(self.x0.max(other.x0));
        let h = self.y1.min(other.y1).saturating_sub(self.y0.max(other.y0));
        w as u64 * h as u64
    }

    /// The part of the box inside a `width × height` image, if any.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BBox> {
        let x1 = self.x1.min(width);
        let y1 = self.y1.min(height);
        (self.x0 < x1 && self.y0 < y1).then_some(BBox { x1, y1, ..*self })
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }
}

fn clamp_span(a: f64, b: f64, limit: u32) -> (u32, u32) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let lo = lo.round().clamp(0.0, limit as f64) as u32;
    let hi = hi.round().clamp(0.0, limit as f64) as u32;
    if lo < hi {
        (lo, hi)
    } else if hi < limit {
        (hi, hi + 1)
    } else {
        (limit - 1, limit)
    }
}
