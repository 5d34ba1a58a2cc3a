use std::str::FromStr;

use nalgebra::RealField;
use num_traits::ToPrimitive;
use rustfft::FftNum;

/// Real scalar type the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. Everything that needs an SVD, a
/// Hermitian eigendecomposition or a mode-3 FFT is written against this
/// trait rather than a concrete float.
pub trait Real: RealField + FftNum + ToPrimitive + FromStr + Copy {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        nalgebra::convert(n as f64)
    }

    /// Lossy conversion used for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T: RealField + FftNum + ToPrimitive + FromStr + Copy> Real for T {}
