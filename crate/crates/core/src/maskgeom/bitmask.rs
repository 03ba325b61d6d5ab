use super::BBox;
use crate::error::{Error, Result};

const WORD: usize = 64;

/// Dense binary mask, one bit per pixel, row-major: pixel `(x, y)` is bit
/// `y * width + x`. Bits past `width * height` in the last word are always 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitMask({}x{}, {} set)", self.width, self.height, self.count_ones())?;
        if self.width <= 16 && self.height <= 16 {
            for y in 0..self.height {
                f.write_str("\n  ")?;
                for x in 0..self.width {
                    f.write_str(if self.get(x, y) { "#" } else { "." })?;
                }
            }
        }
        Ok(())
    }
}

impl BitMask {
    /// All-zero mask.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch {
                expected: (1, 1),
                found: (width, height),
            });
        }
        let len = width as usize * height as usize;
        Ok(BitMask {
            width,
            height,
            words: vec![0; len.div_ceil(WORD)],
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut m = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        Ok(m)
    }

    /// The in-image part of `b` as a mask.
    pub fn from_box(width: u32, height: u32, b: &BBox) -> Result<Self> {
        let mut m = Self::new(width, height)?;
        if let Some(b) = b.clamp_to(width, height) {
            for y in b.y0()..b.y1() {
                let row = m.index(0, y);
                m.fill_range(row + b.x0() as usize, row + b.x1() as usize);
            }
        }
        Ok(m)
    }

    pub fn empty_like(&self) -> Self {
        BitMask {
            width: self.width,
            height: self.height,
            words: vec![0; self.words.len()],
        }
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

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let i = self.index(x, y);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        let i = self.index(x, y);
        if value {
            self.words[i / WORD] |= 1 << (i % WORD);
        } else {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub(crate) fn check_dims(&self, other: &BitMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// `|self ∧ other|`. Dimensions must match.
    pub(crate) fn and_count(&self, other: &BitMask) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// `|self ∨ other|`. Dimensions must match.
    pub(crate) fn or_count(&self, other: &BitMask) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as u64)
            .sum()
    }

    pub fn union_with(&mut self, other: &BitMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn intersect_with(&mut self, other: &BitMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        Ok(())
    }

    /// Pixels set in `self` but not in `other`.
    pub fn difference_count(&self, other: &BitMask) -> Result<u64> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as u64)
            .sum())
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BitMask) -> bool {
        self.dims() == other.dims() && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn fill_range(&mut self, start: usize, end: usize) {
        let mut i = start;
        while i < end {
            let word = i / WORD;
            let lo = i % WORD;
            let hi = (end - word * WORD).min(WORD);
            self.words[word] |= range_bits(lo, hi);
            i = word * WORD + hi;
        }
    }

    fn count_range(&self, start: usize, end: usize) -> u64 {
        let mut i = start;
        let mut n = 0u64;
        while i < end {
            let word = i / WORD;
            let lo = i % WORD;
            let hi = (end - word * WORD).min(WORD);
            n += (self.words[word] & range_bits(lo, hi)).count_ones() as u64;
            i = word * WORD + hi;
        }
        n
    }

    /// Set pixels inside `b` (clamped to the image).
    pub fn count_in_box(&self, b: &BBox) -> u64 {
        let Some(b) = b.clamp_to(self.width, self.height) else {
            return 0;
        };
        (b.y0()..b.y1())
            .map(|y| {
                let row = self.index(0, y);
                self.count_range(row + b.x0() as usize, row + b.x1() as usize)
            })
            .sum()
    }

    /// Coordinates of set pixels in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let width = self.width as usize;
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * WORD + b;
                Some(((i % width) as u32, (i / width) as u32))
            })
        })
    }

    /// Tight half-open extent `[x0, x1, y0, y1]` of the set pixels.
    pub fn extent(&self) -> Option<[u32; 4]> {
        let mut it = self.iter_ones();
        let (x, y) = it.next()?;
        let mut e = [x, y, x + 1, y + 1];
        for (x, y) in it {
            e[0] = e[0].min(x);
            e[1] = e[1].min(y);
            e[2] = e[2].max(x + 1);
            e[3] = e[3].max(y + 1);
        }
        Some(e)
    }
}

#[inline]
fn range_bits(lo: usize, hi: usize) -> u64 {
    debug_assert!(lo < hi && hi <= WORD);
    let upper = if hi == WORD { u64::MAX } else { (1u64 << hi) - 1 };
    upper & !((1u64 << lo) - 1)
}
