//! Floating-point scalar abstraction shared by every geometric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for coordinates, costs and loss values.
///
/// Implemented for `f32` and `f64`. Tolerances are per type because the
/// double-precision thresholds fall below `f32` resolution.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Cross-product magnitude below which two directions are treated as parallel.
    fn parallel_tol() -> Self;
    /// Distance below which consecutive polygon vertices are merged.
    fn merge_tol() -> Self;

    /// Converts an `f64` constant. Literal constants always fit both types.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable as scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn parallel_tol() -> Self {
        1e-12
    }
    #[inline]
    fn merge_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn parallel_tol() -> Self {
        1e-10
    }
    #[inline]
    fn merge_tol() -> Self {
        1e-6
    }
}
