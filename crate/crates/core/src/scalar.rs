//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the models and filters are generic over.
///
/// Implemented for `f32` and `f64`. The bound set is the one nalgebra needs for
/// decompositions plus lossless-enough conversion to and from `f64`, which the
/// statistics layer works in.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Machine epsilon of the type.
    fn epsilon() -> Self;

    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("usize is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn absolute(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn neg_infinity() -> Self;

    fn nan_value() -> Self;

    fn is_finite_value(self) -> bool;

    fn is_nan_value(self) -> bool {
        self != self
    }
}

/// Traits whose methods the generic code calls on [`Scalar`] values.
pub mod prelude {
    pub use super::Scalar;
    pub use nalgebra::{ComplexField, RealField};
    pub use num_traits::{One, Zero};
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }

    fn neg_infinity() -> Self {
        f64::NEG_INFINITY
    }

    fn nan_value() -> Self {
        f64::NAN
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }

    fn neg_infinity() -> Self {
        f32::NEG_INFINITY
    }

    fn nan_value() -> Self {
        f32::NAN
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Scalar>(x: f64) -> f64 {
        T::of(x).to_f64_lossy()
    }

    #[test]
    fn conversions() {
        assert_eq!(roundtrip::<f64>(0.1), 0.1);
        assert!((roundtrip::<f32>(0.1) - 0.1).abs() < 1e-7);
        assert_eq!(<f32 as Scalar>::of(-2.0).absolute(), 2.0);
        assert!(!<f64 as Scalar>::neg_infinity().is_finite_value());
    }
}
