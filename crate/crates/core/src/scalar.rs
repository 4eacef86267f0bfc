//! Scalar abstraction shared by volumes, sampling geometry and descriptors.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point type used for intensities, offsets, tap weights and
/// normalized histogram values. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Copy
    + Send
    + Sync
    + Debug
    + Display
    + Default
    + 'static
{
    /// Lossy conversion from `f64`; every finite `f64` maps to some value.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to scalar")
    }

    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
