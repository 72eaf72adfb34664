//! Scalar abstraction for the numerical kernels: `f32` or `f64`.

use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals and tolerances.
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("finite f64 converts to any Real")
    }

    /// Conversion to `f64` for reporting.
    fn to_f64(self) -> f64 {
        <f64 as num_traits::NumCast>::from(self).expect("Real converts to f64")
    }

    fn of_usize(x: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(x).expect("usize converts to Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
