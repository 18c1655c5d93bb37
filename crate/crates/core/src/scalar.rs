//! Scalar abstraction for the numerical core.

use nalgebra as na;
use num_traits as nt;

/// Floating point type accepted by the discretization, modal and response layers.
pub trait Float:
    Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField + na::Scalar + Send + Sync
{
    const ZERO: Self;
    const ONE: Self;
    const TWO: Self;
    const HALF: Self;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    /// Lossy conversion to `f64` for reporting.
    fn as_f64(self) -> f64;

    /// Relative machine epsilon of the type.
    fn eps() -> Self;
}

macro_rules! impl_float {
    ($f:ty) => {
        impl Float for $f {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const TWO: Self = 2.0;
            const HALF: Self = 0.5;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $f
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn eps() -> Self {
                <$f>::EPSILON
            }
        }
    };
}

impl_float!(f32);
impl_float!(f64);
