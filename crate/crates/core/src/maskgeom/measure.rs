use super::{BBox, BitMask};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Intersection over union of two boxes on the integer pixel grid.
pub fn box_iou<T: Scalar>(a: &BBox, b: &BBox) -> T {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    T::ratio(inter, union)
}

/// `|a ∧ b| / |a ∨ b|`, with IoU of two empty masks defined as 1.
pub fn mask_iou<T: Scalar>(a: &BitMask, b: &BitMask) -> Result<T> {
    a.check_dims(b)?;
    let union = a.or_count(b);
    if union == 0 {
        return Ok(T::one());
    }
    Ok(T::ratio(a.and_count(b), union))
}

/// Fraction of the box covered by the mask: `|m ∩ b| / area(b)`.
pub fn coverage<T: Scalar>(m: &BitMask, b: &BBox) -> T {
    T::ratio(m.count_in_box(b), b.area())
}

/// Fraction of the mask lying inside the box: `|m ∩ b| / |m|`.
pub fn containment<T: Scalar>(m: &BitMask, b: &BBox) -> Result<T> {
    let total = m.count_ones();
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(T::ratio(m.count_in_box(b), total))
}

/// The pixels of `m` that lie inside `b`.
pub fn clip_mask(m: &BitMask, b: &BBox) -> BitMask {
    let mut out = BitMask::from_box(m.width(), m.height(), b).expect("dims taken from a valid mask");
    out.intersect_with(m).expect("same dims");
    out
}

/// Bitwise OR of all masks. An empty list has no dimensions and is an error.
pub fn union_masks<'a>(ms: impl IntoIterator<Item = &'a BitMask>) -> Result<BitMask> {
    let mut it = ms.into_iter();
    let first = it.next().ok_or(Error::EmptyUnion)?;
    let mut out = first.clone();
    for m in it {
        out.union_with(m)?;
    }
    Ok(out)
}
