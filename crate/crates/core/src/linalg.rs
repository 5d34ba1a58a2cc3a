//! Dense complex helpers shared by the tensor algebra, the proximal
//! operators and the solver.
//!
//! Complex products are computed on split real/imaginary parts so that the
//! heavy lifting goes through the real GEMM kernel nalgebra dispatches to.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;

pub fn split<T: Real>(m: &CMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub fn join<T: Real>(re: &DMatrix<T>, im: &DMatrix<T>) -> CMatrix<T> {
    re.zip_map(im, Complex::new)
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// True when every imaginary part is exactly zero.
pub fn is_real<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.im == T::zero())
}

pub fn conj<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.map(|z| z.conj())
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn fro_norm_sq<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `a * b` for complex matrices.
pub fn complex_mul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `aᴴ * b` for complex matrices.
pub fn complex_adjoint_mul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = ar.tr_mul(&br) + ai.tr_mul(&bi);
    let im = ar.tr_mul(&bi) - ai.tr_mul(&br);
    join(&re, &im)
}

fn svd_iteration_cap(rows: usize, cols: usize) -> usize {
    200 * (rows + cols).max(1)
}

fn real_svd<T: Real>(m: DMatrix<T>, vectors: bool) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    let (rows, cols) = m.shape();
    SVD::try_new(m, vectors, vectors, T::default_epsilon(), svd_iteration_cap(rows, cols))
        .ok_or(Error::SvdFailed { rows, cols })
}

fn complex_svd<T: Real>(
    m: CMatrix<T>,
    vectors: bool,
) -> Result<SVD<Complex<T>, nalgebra::Dyn, nalgebra::Dyn>> {
    let (rows, cols) = m.shape();
    SVD::try_new(m, vectors, vectors, T::default_epsilon(), svd_iteration_cap(rows, cols))
        .ok_or(Error::SvdFailed { rows, cols })
}

pub fn singular_values_real<T: Real>(m: &DMatrix<T>) -> Result<DVector<T>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    Ok(real_svd(m.clone(), false)?.singular_values)
}

/// Singular values of a complex matrix; real input takes the real SVD path.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Result<DVector<T>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    if is_real(m) {
        return singular_values_real(&m.map(|z| z.re));
    }
    Ok(complex_svd(m.clone(), false)?.singular_values)
}

pub fn nuclear_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.iter().fold(T::zero(), |a, &s| a + s))
}

/// Singular value thresholding of a real matrix: `U max(Σ - tau, 0) Vᵀ`.
pub fn svt_real<T: Real>(m: &DMatrix<T>, tau: T) -> Result<DMatrix<T>> {
    if m.is_empty() || tau == T::zero() {
        return Ok(m.clone());
    }
    let svd = real_svd(m.clone(), true)?;
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let kept: Vec<(usize, T)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter_map(|(idx, &s)| (s > tau).then_some((idx, s - tau)))
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    if kept.is_empty() {
        return Ok(out);
    }
    let mut left = DMatrix::zeros(m.nrows(), kept.len());
    let mut right = DMatrix::zeros(kept.len(), m.ncols());
    for (slot, &(idx, s)) in kept.iter().enumerate() {
        left.set_column(slot, &(u.column(idx) * s));
        right.set_row(slot, &v_t.row(idx));
    }
    left.mul_to(&right, &mut out);
    Ok(out)
}

/// Singular value thresholding of a complex matrix: `U max(Σ - tau, 0) Vᴴ`.
pub fn svt<T: Real>(m: &CMatrix<T>, tau: T) -> Result<CMatrix<T>> {
    if m.is_empty() || tau == T::zero() {
        return Ok(m.clone());
    }
    if is_real(m) {
        return Ok(to_complex(&svt_real(&m.map(|z| z.re), tau)?));
    }
    let svd = complex_svd(m.clone(), true)?;
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let kept: Vec<(usize, T)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter_map(|(idx, &s)| (s > tau).then_some((idx, s - tau)))
        .collect();
    if kept.is_empty() {
        return Ok(CMatrix::zeros(m.nrows(), m.ncols()));
    }
    let mut left = CMatrix::zeros(m.nrows(), kept.len());
    let mut right = CMatrix::zeros(kept.len(), m.ncols());
    for (slot, &(idx, s)) in kept.iter().enumerate() {
        left.set_column(slot, &(u.column(idx) * Complex::new(s, T::zero())));
        right.set_row(slot, &v_t.row(idx));
    }
    Ok(complex_mul(&left, &right))
}

/// Cached eigendecomposition `G = U Λ Uᴴ` of a Hermitian positive
/// semidefinite matrix, used to apply `(G + shift·I)⁻¹` for any shift.
#[derive(Debug, Clone)]
pub struct ShiftedHermitianSolver<T: Real> {
    vectors_re: DMatrix<T>,
    // None when the Gram matrix is real symmetric.
    vectors_im: Option<DMatrix<T>>,
    values: DVector<T>,
}

impl<T: Real> ShiftedHermitianSolver<T> {
    pub fn new(gram: &CMatrix<T>) -> Self {
        if is_real(gram) {
            let eig = SymmetricEigen::new(gram.map(|z| z.re));
            Self {
                vectors_re: eig.eigenvectors,
                vectors_im: None,
                values: eig.eigenvalues,
            }
        } else {
            let eig = SymmetricEigen::new(gram.clone());
            let (re, im) = split(&eig.eigenvectors);
            Self {
                vectors_re: re,
                vectors_im: Some(im),
                values: eig.eigenvalues,
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.values
    }

    /// Solves `(G + shift·I) X = rhs`. Requires `shift > -λ_min(G)`.
    pub fn solve(&self, shift: T, rhs: &CMatrix<T>) -> CMatrix<T> {
        let (br, bi) = split(rhs);
        let scale = |m: &mut DMatrix<T>| {
            for (mut row, &lam) in m.row_iter_mut().zip(self.values.iter()) {
                row /= lam + shift;
            }
        };
        match &self.vectors_im {
            None => {
                let u = &self.vectors_re;
                let mut tr = u.tr_mul(&br);
                let mut ti = u.tr_mul(&bi);
                scale(&mut tr);
                scale(&mut ti);
                join(&(u * tr), &(u * ti))
            }
            Some(ui) => {
                let ur = &self.vectors_re;
                let mut tr = ur.tr_mul(&br) + ui.tr_mul(&bi);
                let mut ti = ur.tr_mul(&bi) - ui.tr_mul(&br);
                scale(&mut tr);
                scale(&mut ti);
                let re = ur * &tr - ui * &ti;
                let im = ur * &ti + ui * &tr;
                join(&re, &im)
            }
        }
    }
}
