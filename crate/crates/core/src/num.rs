//! Scalar abstraction shared by the generic parts of the simulator.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// The quantum dynamics only reach the conservation bounds used throughout
/// this crate in `f64`; `f32` instantiations are useful for quick looks and
/// for checking that the generic code paths stay type-agnostic.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduces an angle to the half-open interval (−π, π].
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::TAU();
    let mut r = phi % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(2.0 * PI)).abs() < 1e-12);
        assert!((wrap_phase(-0.5f32) + 0.5).abs() < 1e-7);
    }
}
