use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the statistical routines are generic over.
///
/// Implemented for `f32` and `f64`. Distribution functions (normal and
/// Student-t tails) are evaluated in `f64` and converted back.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless for `f64`, rounding for `f32`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sum of squared deviations from the mean, plus the mean itself.
pub(crate) fn mean_and_deviations<T: Scalar>(values: &[T]) -> (T, Vec<T>) {
    let n = T::of_usize(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let dev = values.iter().map(|&v| v - mean).collect();
    (mean, dev)
}
