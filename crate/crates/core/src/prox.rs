//! Closed-form proximal operators used by the ADMM updates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::Real;
use crate::tensor3::{fft_mode3, ifft_mode3, Tensor3};

/// Nonnegative, finite shrinkage amount (a regularizer weight over the
/// penalty parameter).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShrinkageThreshold<T>(T);

impl<T: Real> ShrinkageThreshold<T> {
    pub fn new(value: T) -> Result<Self> {
        if !value.is_finite() || value < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "shrinkage threshold must be finite and nonnegative, got {}",
                value.as_f64()
            )));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Singular value thresholding, the minimizer of `τ‖Z‖_* + ½‖Z − M‖_F²`.
pub fn svt<T: Real>(m: &CMatrix<T>, tau: ShrinkageThreshold<T>) -> Result<CMatrix<T>> {
    linalg::svt(m, tau.value())
}

pub fn svt_real<T: Real>(m: &DMatrix<T>, tau: ShrinkageThreshold<T>) -> Result<DMatrix<T>> {
    linalg::svt_real(m, tau.value())
}

/// Tensor-nuclear-norm prox: SVT with threshold `tau` on every frontal slice
/// of the mode-3 spectrum, then back to the spatial domain.
///
/// Because the forward DFT is unnormalized, minimizing
/// `λ·TNN(Z) + (ρ/2)‖Z − A‖_F²` needs `tau = n3·λ/ρ` here.
pub fn prox_tnn<T: Real>(a: &Tensor3<T>, tau: ShrinkageThreshold<T>) -> Result<Tensor3<T>> {
    if tau.value() == T::zero() {
        return Ok(a.clone());
    }
    let (n1, n2, _) = a.dims();
    let spectral = fft_mode3(a);
    let shrunk = spectral.map_independent_slices(n1, n2, |_, s| linalg::svt(s, tau.value()))?;
    ifft_mode3(&shrunk)
}

/// Tube-wise group shrinkage, the minimizer of `τ‖Y‖_F1 + ½‖Y − A‖_F²`.
///
/// Each tube `a = A(i,j,:)` becomes `max(0, ‖a‖ − τ)/‖a‖ · a`; a zero tube
/// stays zero.
pub fn prox_f1<T: Real>(a: &Tensor3<T>, tau: ShrinkageThreshold<T>) -> Tensor3<T> {
    let (n1, n2, n3) = a.dims();
    let tau = tau.value();
    let mut out = a.clone();
    if tau == T::zero() {
        return out;
    }
    for j in 0..n2 {
        for i in 0..n1 {
            let mut norm_sq = T::zero();
            for l in 0..n3 {
                let v = a[(i, j, l)];
                norm_sq += v * v;
            }
            let norm = norm_sq.sqrt();
            let scale = if norm > tau { (norm - tau) / norm } else { T::zero() };
            for l in 0..n3 {
                out[(i, j, l)] = a[(i, j, l)] * scale;
            }
        }
    }
    out
}
