use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the discretization and solvers are generic over.
///
/// Implemented for `f32` and `f64`. Solver tolerances are stated in `f64` and
/// converted on entry, so tight defaults only make sense for `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|b|^e - |a|^e` where `b = a + d`, evaluated without cancellation.
///
/// Works on squared magnitudes: `b2 = |b|^2` and `delta2 = b2 - a2` must be
/// supplied with `delta2` computed from the increment (e.g. `d * (2a + d)`), not
/// by subtracting two rounded squares.
pub(crate) fn pow_increment<T: Scalar>(a2: T, delta2: T, e: T) -> T {
    let half = e * T::c(0.5);
    if a2 <= T::zero() {
        let b2 = (a2 + delta2).max(T::zero());
        return b2.powf(half);
    }
    let ratio = delta2 / a2;
    if ratio <= -T::one() {
        return -a2.powf(half);
    }
    a2.powf(half) * (half * ratio.ln_1p()).exp_m1()
}
