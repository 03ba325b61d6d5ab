//! Scalar abstraction for ratio-valued measures.
//!
//! Every overlap measure and metric in this crate is a ratio of pixel or item
//! counts. Computing them through [`Scalar`] lets the same code run in `f32`,
//! `f64`, or exact rational arithmetic ([`crate::Exact`]), which the tests use
//! to check the float paths against exact values.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{One, Zero};

pub trait Scalar:
    Copy
    + Debug
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `num / den`. `den` must be nonzero.
    fn ratio(num: u64, den: u64) -> Self;

    fn from_count(n: u64) -> Self {
        Self::ratio(n, 1)
    }

    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn ratio(num: u64, den: u64) -> Self {
        // Divide in f64 so large pixel counts round once.
        (num as f64 / den as f64) as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

macro_rules! impl_exact {
    ($($int:ty),*) => {$(
        impl Scalar for Ratio<$int> {
            fn ratio(num: u64, den: u64) -> Self {
                let num = <$int>::try_from(num).expect("count exceeds rational range");
                let den = <$int>::try_from(den).expect("count exceeds rational range");
                Ratio::new(num, den)
            }

            fn to_f64(self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    )*};
}

impl_exact!(i64, i128);

/// Arithmetic mean; `None` for an empty input.
pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    let mut sum = T::zero();
    let mut n = 0u64;
    for v in values {
        sum = sum + v;
        n += 1;
    }
    (n > 0).then(|| sum / T::from_count(n))
}
