use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable throughout the numerical core.
///
/// Implemented by `f32` and `f64`; all core math is written against this
/// trait so the crate-root aliases can pin a concrete width.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ScalarOperand + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_usize_(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    fn from_f64_(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ScalarOperand
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
