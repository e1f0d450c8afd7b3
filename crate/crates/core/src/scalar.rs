//! Scalar abstraction used by every numeric routine in this crate.
//!
//! All weights, probabilities, and fit parameters are generic over [`Real`],
//! so the same code runs in `f32` or `f64`. Counts and node ids stay integral.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32`, `f64`, or anything float-like enough.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only if the target type cannot
    /// represent any approximation (never for `f32`/`f64`).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 must convert into Real scalar")
    }

    /// Lossy conversion from `usize` counts.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert into Real scalar")
    }

    /// Widening conversion used when a routine needs a concrete `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real scalar must convert into f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
