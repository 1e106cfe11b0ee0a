//! Numeric abstraction shared by the floating-point and exact-rational paths.

use std::fmt::Debug;

use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive};

/// Field element usable by flow construction, conditioning and averaging.
///
/// Implemented for `f64` (solver path) and [`BigRational`] (exact path).
pub trait Scalar:
    Clone + PartialOrd + Debug + Send + Sync + num::Num + Signed + FromPrimitive + ToPrimitive
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + PartialOrd + Debug + Send + Sync + num::Num + Signed + FromPrimitive + ToPrimitive
{
}

/// Exact rational image of a finite float (every finite `f64` is dyadic).
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
