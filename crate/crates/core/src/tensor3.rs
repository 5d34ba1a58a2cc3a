//! Dense third-order tensors and the t-product algebra.
//!
//! Storage is frontal-slice contiguous: slice `l` occupies
//! `data[l*n1*n2 .. (l+1)*n1*n2]` and is column-major inside, so a frontal
//! slice maps directly onto an nalgebra matrix. Tubes `A(i,j,:)` are strided
//! by `n1*n2`.
//!
//! The DFT along mode 3 is unnormalized in the forward direction and carries
//! `1/n3` on the inverse. Under that convention the tensor nuclear norm is the
//! plain sum of singular values over all spectral frontal slices, and
//! `‖A‖_F² = ‖Â‖_F² / n3`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::Real;

/// Dense real tensor of shape `n1 × n2 × n3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    dims: (usize, usize, usize),
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    /// Zero tensor. Panics if any dimension is zero.
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && n3 > 0, "tensor dimensions must be positive");
        Self {
            dims: (n1, n2, n3),
            data: vec![T::zero(); n1 * n2 * n3],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, n3: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut out = Self::zeros(n1, n2, n3);
        for l in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    out[(i, j, l)] = f(i, j, l);
                }
            }
        }
        out
    }

    /// Wraps a frontal-slice-contiguous buffer, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(dims: (usize, usize, usize), data: Vec<T>) -> Result<Self> {
        let (n1, n2, n3) = dims;
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidArgument(format!("tensor dims must be positive, got {dims:?}")));
        }
        if data.len() != n1 * n2 * n3 {
            return Err(dim_mismatch(
                "Tensor3::from_vec",
                format!("{} elements for dims {dims:?}", data.len()),
            ));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Tensor3::from_vec"));
        }
        Ok(Self { dims, data })
    }

    pub fn from_frontal_slices(slices: &[DMatrix<T>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no frontal slices".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for s in slices {
            if s.shape() != (n1, n2) {
                return Err(dim_mismatch(
                    "Tensor3::from_frontal_slices",
                    format!("slice {:?} vs {:?}", s.shape(), (n1, n2)),
                ));
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::from_vec((n1, n2, slices.len()), data)
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, l: usize) -> usize {
        let (n1, n2, _) = self.dims;
        (l * n2 + j) * n1 + i
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frontal_slice_view(&self, l: usize) -> DMatrixView<'_, T> {
        let (n1, n2, _) = self.dims;
        let len = n1 * n2;
        DMatrixView::from_slice(&self.data[l * len..(l + 1) * len], n1, n2)
    }

    pub fn frontal_slice(&self, l: usize) -> DMatrix<T> {
        self.frontal_slice_view(l).into_owned()
    }

    pub fn set_frontal_slice(&mut self, l: usize, m: &DMatrix<T>) {
        let (n1, n2, _) = self.dims;
        assert_eq!(m.shape(), (n1, n2), "frontal slice shape");
        let len = n1 * n2;
        self.data[l * len..(l + 1) * len].copy_from_slice(m.as_slice());
    }

    pub fn frontal_slices(&self) -> Vec<DMatrix<T>> {
        (0..self.dims.2).map(|l| self.frontal_slice(l)).collect()
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.dims.2).map(|l| self[(i, j, l)]).collect()
    }

    pub fn set_tube(&mut self, i: usize, j: usize, tube: &[T]) {
        assert_eq!(tube.len(), self.dims.2, "tube length");
        for (l, &v) in tube.iter().enumerate() {
            self[(i, j, l)] = v;
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.dims, other.dims, "zip_map on tensors of different shape");
        Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.dims, other.dims, "axpy on tensors of different shape");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn fro_norm_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x)
    }
}

impl<T> Index<(usize, usize, usize)> for Tensor3<T>
where
    T: Real,
{
    type Output = T;
    #[inline]
    fn index(&self, (i, j, l): (usize, usize, usize)) -> &T {
        let o = self.offset(i, j, l);
        &self.data[o]
    }
}

impl<T: Real> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (i, j, l): (usize, usize, usize)) -> &mut T {
        let o = self.offset(i, j, l);
        &mut self.data[o]
    }
}

impl<T: Real> Add for &Tensor3<T> {
    type Output = Tensor3<T>;
    fn add(self, rhs: Self) -> Tensor3<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Tensor3<T> {
    type Output = Tensor3<T>;
    fn sub(self, rhs: Self) -> Tensor3<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Neg for &Tensor3<T> {
    type Output = Tensor3<T>;
    fn neg(self) -> Tensor3<T> {
        self.map(|a| -a)
    }
}

impl<T: Real> Mul<T> for &Tensor3<T> {
    type Output = Tensor3<T>;
    fn mul(self, rhs: T) -> Tensor3<T> {
        self.scale(rhs)
    }
}

/// Complex tensor holding the mode-3 DFT of a real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor3<T> {
    dims: (usize, usize, usize),
    data: Vec<Complex<T>>,
    from_forward: bool,
}

impl<T: Real> SpectralTensor3<T> {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && n3 > 0, "tensor dimensions must be positive");
        Self {
            dims: (n1, n2, n3),
            data: vec![Complex::new(T::zero(), T::zero()); n1 * n2 * n3],
            from_forward: false,
        }
    }

    /// Assembles a spectral tensor from explicit frontal slices.
    pub fn from_frontal_slices(slices: &[CMatrix<T>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no frontal slices".into()))?;
        let (n1, n2) = first.shape();
        let mut out = Self::zeros(n1, n2, slices.len());
        for (l, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(dim_mismatch("SpectralTensor3::from_frontal_slices", "ragged slices"));
            }
            out.set_frontal_slice(l, s);
        }
        Ok(out)
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    /// Whether this tensor came out of [`fft_mode3`] untouched.
    pub fn is_forward_transform(&self) -> bool {
        self.from_forward
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> Complex<T> {
        let (n1, n2, _) = self.dims;
        self.data[(l * n2 + j) * n1 + i]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn frontal_slice(&self, l: usize) -> CMatrix<T> {
        let (n1, n2, _) = self.dims;
        let len = n1 * n2;
        CMatrix::from_column_slice(n1, n2, &self.data[l * len..(l + 1) * len])
    }

    pub fn set_frontal_slice(&mut self, l: usize, m: &CMatrix<T>) {
        let (n1, n2, _) = self.dims;
        assert_eq!(m.shape(), (n1, n2), "frontal slice shape");
        let len = n1 * n2;
        self.data[l * len..(l + 1) * len].copy_from_slice(m.as_slice());
        self.from_forward = false;
    }

    /// Number of leading slices that determine the whole spectrum of a real
    /// tensor, `⌊n3/2⌋ + 1`.
    pub fn independent_slices(&self) -> usize {
        self.dims.2 / 2 + 1
    }

    /// Overwrites slices `l ≥ ⌊n3/2⌋+1` with the conjugates of slices `n3-l`.
    pub fn fill_conjugate_mirror(&mut self) {
        let (n1, n2, n3) = self.dims;
        let len = n1 * n2;
        for l in self.independent_slices()..n3 {
            let src = n3 - l;
            for e in 0..len {
                self.data[l * len + e] = self.data[src * len + e].conj();
            }
        }
    }

    /// Largest entrywise violation of `Â(:,:,l) = conj(Â(:,:,n3-l))`,
    /// relative to the largest modulus.
    pub fn conjugate_symmetry_defect(&self) -> T {
        let (n1, n2, n3) = self.dims;
        let len = n1 * n2;
        let scale = self.data.iter().fold(T::zero(), |m, z| m.max(linalg::cabs(*z)));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for l in 0..n3 {
            let mirror = (n3 - l) % n3;
            for e in 0..len {
                let d = linalg::cabs(self.data[l * len + e] - self.data[mirror * len + e].conj());
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    pub fn fro_norm_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Applies `f` to the independent slices (in parallel) and fills the
    /// remaining ones by conjugate mirroring.
    pub fn map_independent_slices<F>(&self, out_rows: usize, out_cols: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, &CMatrix<T>) -> Result<CMatrix<T>> + Sync,
    {
        let half = self.independent_slices();
        let mapped: Vec<CMatrix<T>> = (0..half)
            .into_par_iter()
            .map(|l| f(l, &self.frontal_slice(l)))
            .collect::<Result<_>>()?;
        let mut out = Self::zeros(out_rows, out_cols, self.dims.2);
        for (l, m) in mapped.iter().enumerate() {
            out.set_frontal_slice(l, m);
        }
        out.fill_conjugate_mirror();
        Ok(out)
    }

    /// Applies `f` to every slice independently, without using symmetry.
    pub fn map_all_slices<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(usize, &CMatrix<T>) -> Result<CMatrix<T>> + Sync,
    {
        let mapped: Vec<CMatrix<T>> = (0..self.dims.2)
            .into_par_iter()
            .map(|l| f(l, &self.frontal_slice(l)))
            .collect::<Result<_>>()?;
        Self::from_frontal_slices(&mapped)
    }

    /// Block-diagonal matrix of the spectral frontal slices.
    pub fn bdiag(&self) -> CMatrix<T> {
        let (n1, n2, n3) = self.dims;
        let mut out = CMatrix::zeros(n1 * n3, n2 * n3);
        for l in 0..n3 {
            out.view_mut((l * n1, l * n2), (n1, n2)).copy_from(&self.frontal_slice(l));
        }
        out
    }
}

/// Twists an `m × n` matrix into an `m × 1 × n` tensor: `T(i,0,l) = M(i,l)`.
pub fn twist<T: Real>(m: &DMatrix<T>) -> Result<Tensor3<T>> {
    if m.is_empty() {
        return Err(Error::InvalidArgument("cannot twist an empty matrix".into()));
    }
    let (rows, cols) = m.shape();
    Ok(Tensor3::from_fn(rows, 1, cols, |i, _, l| m[(i, l)]))
}

/// Inverse of [`twist`].
pub fn squeeze<T: Real>(t: &Tensor3<T>) -> Result<DMatrix<T>> {
    let (n1, n2, n3) = t.dims();
    if n2 != 1 {
        return Err(dim_mismatch("squeeze", format!("expected a lateral slice, got n2 = {n2}")));
    }
    Ok(DMatrix::from_fn(n1, n3, |i, l| t[(i, 0, l)]))
}

/// Stacks the frontal slices vertically into an `(n1·n3) × n2` matrix.
pub fn unfold<T: Real>(a: &Tensor3<T>) -> DMatrix<T> {
    let (n1, n2, n3) = a.dims();
    let mut out = DMatrix::zeros(n1 * n3, n2);
    for l in 0..n3 {
        out.view_mut((l * n1, 0), (n1, n2)).copy_from(&a.frontal_slice_view(l));
    }
    out
}

/// Inverse of [`unfold`] for a given number of frontal slices.
pub fn fold<T: Real>(u: &DMatrix<T>, n3: usize) -> Result<Tensor3<T>> {
    let (rows, n2) = u.shape();
    if n3 == 0 || rows == 0 || n2 == 0 || rows % n3 != 0 {
        return Err(dim_mismatch("fold", format!("{rows} rows not divisible into {n3} slices")));
    }
    let n1 = rows / n3;
    let slices: Vec<DMatrix<T>> = (0..n3)
        .map(|l| u.view((l * n1, 0), (n1, n2)).into_owned())
        .collect();
    Tensor3::from_frontal_slices(&slices)
}

/// Block-circulant matrix: block `(r, c)` is frontal slice `(r - c) mod n3`.
pub fn bcirc<T: Real>(a: &Tensor3<T>) -> DMatrix<T> {
    bcirc_impl(a, false)
}

/// `fault` negates the top-right block; used only to check that the
/// self-test notices a broken reference path.
pub(crate) fn bcirc_impl<T: Real>(a: &Tensor3<T>, fault: bool) -> DMatrix<T> {
    let (n1, n2, n3) = a.dims();
    let mut out = DMatrix::zeros(n1 * n3, n2 * n3);
    for r in 0..n3 {
        for c in 0..n3 {
            let l = (r + n3 - c) % n3;
            let mut block = out.view_mut((r * n1, c * n2), (n1, n2));
            block.copy_from(&a.frontal_slice_view(l));
            if fault && r == 0 && c == n3 - 1 {
                block.neg_mut();
            }
        }
    }
    out
}

/// Block-diagonal matrix of the frontal slices.
pub fn bdiag<T: Real>(a: &Tensor3<T>) -> DMatrix<T> {
    let (n1, n2, n3) = a.dims();
    let mut out = DMatrix::zeros(n1 * n3, n2 * n3);
    for l in 0..n3 {
        out.view_mut((l * n1, l * n2), (n1, n2)).copy_from(&a.frontal_slice_view(l));
    }
    out
}

/// Unnormalized forward DFT of every tube.
pub fn fft_mode3<T: Real>(a: &Tensor3<T>) -> SpectralTensor3<T> {
    let (n1, n2, n3) = a.dims();
    let plane = n1 * n2;
    // Gather tubes contiguously so one planner call transforms all of them.
    let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); plane * n3];
    for p in 0..plane {
        for l in 0..n3 {
            buf[p * n3 + l] = Complex::new(a.data[l * plane + p], T::zero());
        }
    }
    if n3 > 1 {
        FftPlanner::new().plan_fft_forward(n3).process(&mut buf);
    }
    let mut data = vec![Complex::new(T::zero(), T::zero()); plane * n3];
    for p in 0..plane {
        for l in 0..n3 {
            data[l * plane + p] = buf[p * n3 + l];
        }
    }
    SpectralTensor3 {
        dims: (n1, n2, n3),
        data,
        from_forward: true,
    }
}

/// Inverse DFT along mode 3 with `1/n3` scaling.
///
/// Fails with `ImaginaryResidue` if the result has imaginary parts above
/// `1e-6·(1 + max|Re|)`; smaller residue is discarded.
pub fn ifft_mode3<T: Real>(a: &SpectralTensor3<T>) -> Result<Tensor3<T>> {
    let (n1, n2, n3) = a.dims();
    let plane = n1 * n2;
    let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); plane * n3];
    for p in 0..plane {
        for l in 0..n3 {
            buf[p * n3 + l] = a.data[l * plane + p];
        }
    }
    if n3 > 1 {
        FftPlanner::new().plan_fft_inverse(n3).process(&mut buf);
    }
    let inv = T::one() / T::from_count(n3);
    let mut max_re = T::zero();
    let mut max_im = T::zero();
    let mut data = vec![T::zero(); plane * n3];
    for p in 0..plane {
        for l in 0..n3 {
            let z = buf[p * n3 + l] * inv;
            max_re = max_re.max(z.re.abs());
            max_im = max_im.max(z.im.abs());
            data[l * plane + p] = z.re;
        }
    }
    if !(max_im <= T::lit(1e-6) * (T::one() + max_re)) {
        return Err(Error::ImaginaryResidue {
            max_imag: max_im.as_f64(),
            max_real: max_re.as_f64(),
        });
    }
    Ok(Tensor3 {
        dims: (n1, n2, n3),
        data,
    })
}

fn check_tproduct_dims<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>, op: &'static str) -> Result<()> {
    let (_, n2, n3) = a.dims();
    let (m2, _, m3) = b.dims();
    if n2 != m2 || n3 != m3 {
        return Err(dim_mismatch(op, format!("{:?} * {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Product of two spectral tensors slice by slice, using conjugate symmetry.
pub fn spectral_product<T: Real>(a: &SpectralTensor3<T>, b: &SpectralTensor3<T>) -> Result<SpectralTensor3<T>> {
    let (n1, n2, n3) = a.dims();
    let (m2, n4, m3) = b.dims();
    if n2 != m2 || n3 != m3 {
        return Err(dim_mismatch("spectral_product", format!("{:?} * {:?}", a.dims(), b.dims())));
    }
    a.map_independent_slices(n1, n4, |l, s| Ok(linalg::complex_mul(s, &b.frontal_slice(l))))
}

/// t-product `A * B`, computed slice-wise in the Fourier domain.
pub fn tproduct<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
    check_tproduct_dims(a, b, "tproduct")?;
    let prod = spectral_product(&fft_mode3(a), &fft_mode3(b))?;
    ifft_mode3(&prod)
}

/// t-product computed literally as `fold(bcirc(A) · unfold(B))`.
pub fn tproduct_reference<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
    tproduct_reference_impl(a, b, false)
}

pub(crate) fn tproduct_reference_impl<T: Real>(a: &Tensor3<T>, b: &Tensor3<T>, fault: bool) -> Result<Tensor3<T>> {
    check_tproduct_dims(a, b, "tproduct_reference")?;
    fold(&(bcirc_impl(a, fault) * unfold(b)), a.dims().2)
}

/// Identity for the t-product: first frontal slice `I_n`, the rest zero.
pub fn identity_tensor<T: Real>(n: usize, n3: usize) -> Tensor3<T> {
    let mut out = Tensor3::zeros(n, n, n3);
    for i in 0..n {
        out[(i, i, 0)] = T::one();
    }
    out
}

/// Sum of Euclidean norms of all tubes `A(i,j,:)`.
pub fn norm_f1<T: Real>(a: &Tensor3<T>) -> T {
    let (n1, n2, n3) = a.dims();
    let mut total = T::zero();
    for j in 0..n2 {
        for i in 0..n1 {
            let mut s = T::zero();
            for l in 0..n3 {
                let v = a[(i, j, l)];
                s += v * v;
            }
            total += s.sqrt();
        }
    }
    total
}

/// Sum of Frobenius norms of the horizontal slices `A(i,:,:)`.
pub fn norm_ff1<T: Real>(a: &Tensor3<T>) -> T {
    let (n1, n2, n3) = a.dims();
    let mut rows = vec![T::zero(); n1];
    for l in 0..n3 {
        for j in 0..n2 {
            for (i, r) in rows.iter_mut().enumerate() {
                let v = a[(i, j, l)];
                *r += v * v;
            }
        }
    }
    rows.into_iter().fold(T::zero(), |acc, r| acc + r.sqrt())
}

pub fn norm_fro<T: Real>(a: &Tensor3<T>) -> T {
    a.fro_norm_sq().sqrt()
}

/// Weight of spectral slice `l` when summing over the full spectrum using
/// only the independent slices.
pub(crate) fn mirror_weight(l: usize, n3: usize) -> usize {
    if l == 0 || 2 * l == n3 {
        1
    } else {
        2
    }
}

/// Tensor nuclear norm: the sum of singular values of every frontal slice of
/// `fft_mode3(A)`.
pub fn norm_tnn<T: Real>(a: &Tensor3<T>) -> Result<T> {
    spectral_nuclear_norm(&fft_mode3(a))
}

/// Sum of nuclear norms of all frontal slices of a conjugate-symmetric
/// spectral tensor.
pub fn spectral_nuclear_norm<T: Real>(a: &SpectralTensor3<T>) -> Result<T> {
    let n3 = a.dims().2;
    let norms: Vec<T> = (0..a.independent_slices())
        .into_par_iter()
        .map(|l| linalg::nuclear_norm(&a.frontal_slice(l)))
        .collect::<Result<_>>()?;
    Ok(norms
        .into_iter()
        .enumerate()
        .fold(T::zero(), |acc, (l, s)| acc + T::from_count(mirror_weight(l, n3)) * s))
}
