//! Multi-view datasets and their arrangement as a `D × n × k` tensor.
//!
//! Sample `i` of view `v` (a column of the `d_v × n` view matrix) is placed in
//! frontal slice `v` at rows `o_v .. o_v + d_v`, where `o_v` is the sum of the
//! feature counts of the preceding views. Everything else is zero, so lateral
//! slice `i` is the twist of a block-diagonal column arrangement of the views.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor3::Tensor3;

/// `k` views of the same `n` samples, view `v` stored as `d_v × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset<T> {
    views: Vec<DMatrix<T>>,
    labels: Option<Vec<usize>>,
    names: Option<Vec<String>>,
}

impl<T: Real> MultiViewDataset<T> {
    pub fn new(views: Vec<DMatrix<T>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidArgument("a dataset needs at least one view".into()))?;
        let n = first.ncols();
        if n == 0 {
            return Err(Error::InvalidArgument("views must contain at least one sample".into()));
        }
        for (v, m) in views.iter().enumerate() {
            if m.ncols() != n {
                return Err(Error::SampleCountMismatch {
                    view: v,
                    expected: n,
                    found: m.ncols(),
                });
            }
            if m.nrows() == 0 {
                return Err(Error::InvalidArgument(format!("view {v} has no features")));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("MultiViewDataset::new"));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch(l.len(), n));
            }
        }
        Ok(Self {
            views,
            labels,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.views.len() {
            return Err(Error::LengthMismatch(names.len(), self.views.len()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn views(&self) -> &[DMatrix<T>] {
        &self.views
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|m| m.nrows()).collect()
    }

    pub fn total_features(&self) -> usize {
        self.views.iter().map(|m| m.nrows()).sum()
    }

    /// Applies a permutation to the samples: new sample `i` is old `perm[i]`.
    pub fn permute_samples(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_samples();
        if perm.len() != n {
            return Err(Error::LengthMismatch(perm.len(), n));
        }
        let views = self
            .views
            .iter()
            .map(|m| DMatrix::from_fn(m.nrows(), n, |r, i| m[(r, perm[i])]))
            .collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p]).collect());
        Ok(Self {
            views,
            labels,
            names: self.names.clone(),
        })
    }
}

/// Arranges the views into a `D × n × k` tensor. With `normalize`, every
/// sample of every view is scaled to unit Euclidean norm first (zero columns
/// stay zero).
pub fn build_tensor<T: Real>(ds: &MultiViewDataset<T>, normalize: bool) -> Tensor3<T> {
    let d_total = ds.total_features();
    let n = ds.n_samples();
    let k = ds.n_views();
    let mut x = Tensor3::zeros(d_total, n, k);
    let mut offset = 0;
    for (v, view) in ds.views().iter().enumerate() {
        for (i, col) in view.column_iter().enumerate() {
            let scale = if normalize {
                let norm = col.norm();
                if norm > T::zero() {
                    T::one() / norm
                } else {
                    T::one()
                }
            } else {
                T::one()
            };
            for (r, &value) in col.iter().enumerate() {
                x[(offset + r, i, v)] = value * scale;
            }
        }
        offset += view.nrows();
    }
    x
}

/// Parameters of the union-of-subspaces generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub clusters: usize,
    pub per_cluster: usize,
    pub view_dims: Vec<usize>,
    pub subspace_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            clusters: 3,
            per_cluster: 20,
            view_dims: vec![30, 25],
            subspace_dim: 3,
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

/// Draws a labelled multi-view dataset: in every view, each cluster lives on
/// its own random `subspace_dim`-dimensional subspace, with isotropic
/// Gaussian noise on top. Samples are ordered cluster by cluster.
pub fn synth_generate<T: Real>(params: &SynthParams) -> Result<MultiViewDataset<T>> {
    let SynthParams {
        clusters,
        per_cluster,
        ref view_dims,
        subspace_dim,
        noise_sigma,
        seed,
    } = *params;
    if clusters == 0 || per_cluster == 0 || subspace_dim == 0 || view_dims.is_empty() {
        return Err(Error::InvalidArgument("synthetic counts must all be at least 1".into()));
    }
    if let Some(&d) = view_dims.iter().find(|&&d| d < subspace_dim) {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {subspace_dim} exceeds view dimension {d}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument("noise sigma must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    let n = clusters * per_cluster;
    let mut views = Vec::with_capacity(view_dims.len());
    for &d in view_dims {
        let mut view = DMatrix::<f64>::zeros(d, n);
        for c in 0..clusters {
            let raw = DMatrix::<f64>::from_fn(d, subspace_dim, |_, _| gauss());
            let basis = raw.qr().q();
            for p in 0..per_cluster {
                let coeffs = nalgebra::DVector::<f64>::from_fn(subspace_dim, |_, _| gauss());
                let mut point = &basis * coeffs;
                for x in point.iter_mut() {
                    *x += noise_sigma * gauss();
                }
                view.set_column(c * per_cluster + p, &point);
            }
        }
        views.push(view.map(T::lit));
    }
    let labels = (0..n).map(|i| i / per_cluster).collect();
    MultiViewDataset::new(views, Some(labels))
}
