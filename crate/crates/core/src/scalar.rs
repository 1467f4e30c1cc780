use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar field the numerics run over.
///
/// Implemented for `f32` and `f64`. Tolerances that are quoted as absolute
/// numbers (1e-12 and friends) are clamped from below by a multiple of
/// [`Real::eps`] so that the `f32` instantiation stays meaningful.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Machine epsilon.
    fn eps() -> Self;

    /// Lossless-ish conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// `max(x, k * eps)`: a tolerance that never drops below rounding level.
    #[inline]
    fn tol(x: f64, k: f64) -> Self {
        let t = Self::lit(x);
        let floor = Self::eps() * Self::lit(k);
        if t > floor {
            t
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}
