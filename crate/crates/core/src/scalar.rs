//! Numeric traits the metric and analysis code is written against.
//!
//! Scores that only need field arithmetic (LEMOD ratios, means, percentages)
//! are generic over [`Score`], which exact rationals satisfy. Anything that
//! takes logarithms or square roots (BLEU, Pearson) needs [`RealScore`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A number a score can be expressed in: `f32`, `f64` or an exact ratio.
pub trait Score: Num + FromPrimitive + ToPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static {}

impl<T> Score for T where T: Num + FromPrimitive + ToPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static {}

/// A floating-point score.
pub trait RealScore: Score + Float {}

impl<T> RealScore for T where T: Score + Float {}

/// Converts a count into `T`. Counts in this crate are bounded by input
/// sizes, so the conversion cannot fail for any supported scalar.
#[inline]
pub fn from_count<T: Score>(n: usize) -> T {
    T::from_usize(n).expect("count representable in score type")
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn from_f64<T: Score>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in score type")
}
