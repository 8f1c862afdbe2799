//! Scalar abstraction shared by every solver in the crate.

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point type the numerics are generic over (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal. Every value used here is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    /// Converts a count or index.
    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
