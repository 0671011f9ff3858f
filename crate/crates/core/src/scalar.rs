use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the dense kernels are generic over: `f32` or `f64`.
///
/// Everything downstream of the matrix type (MLPs, Adam, the full model and
/// the training harness) is written against this trait; the crate root
/// exports concrete aliases for both widths.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// IEEE total order, used by the deterministic-reduction mode so that
    /// summation order is a function of the values, not of node numbering.
    fn total_order(&self, other: &Self) -> Ordering;

    /// Lossless conversion from `f64` literals (hyperparameters, tolerances).
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to any Scalar")
    }
}

impl Scalar for f32 {
    fn total_order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl Scalar for f64 {
    fn total_order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}
