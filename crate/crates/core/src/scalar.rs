//! The floating-point scalar used by the numerical modules.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Bound satisfied by every float the numerics are generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
}

pub type C<T> = Complex<T>;
pub type C64 = Complex<f64>;
