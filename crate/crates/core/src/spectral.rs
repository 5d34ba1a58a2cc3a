//! From a representation tensor to cluster labels: per-view affinities,
//! an averaged Markov transition matrix, its symmetrized spectral embedding
//! and k-means on the embedding rows.
//!
//! The aggregation step averages the per-view transition matrices. Robust
//! low-rank + sparse recovery of a shared transition matrix is not attempted.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::kmeans::{derive_seed, kmeans, KMeansResult};
use crate::scalar::Real;
use crate::tensor3::Tensor3;

const MAX_POWER_ITERATIONS: usize = 10_000;

/// Symmetric, nonnegative `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T: Real>(DMatrix<T>);

impl<T: Real> AffinityMatrix<T> {
    pub fn new(w: DMatrix<T>) -> Result<Self> {
        if !w.is_square() {
            return Err(dim_mismatch("AffinityMatrix::new", format!("{:?} is not square", w.shape())));
        }
        let tol = T::lit(1e-12) * (T::one() + w.amax());
        for j in 0..w.ncols() {
            for i in 0..w.nrows() {
                let (a, b) = (w[(i, j)], w[(j, i)]);
                if !a.is_finite() || a < T::zero() || (a - b).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "affinity must be symmetric, finite and nonnegative (entry {i},{j})"
                    )));
                }
            }
        }
        Ok(Self(w))
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

/// Row-stochastic `n × n` matrix together with the teleport weight mixed in.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T: Real> {
    matrix: DMatrix<T>,
    teleport: T,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn new(matrix: DMatrix<T>, teleport: T) -> Result<Self> {
        if !matrix.is_square() {
            return Err(dim_mismatch("TransitionMatrix::new", format!("{:?} is not square", matrix.shape())));
        }
        let tol = T::lit(1e-10).max(T::from_count(matrix.ncols()) * T::default_epsilon() * T::lit(8.0));
        for (i, row) in matrix.row_iter().enumerate() {
            if row.iter().any(|&p| !p.is_finite() || p < T::zero()) {
                return Err(Error::InvalidArgument(format!("transition row {i} has a negative entry")));
            }
            if (row.sum() - T::one()).abs() > tol {
                return Err(Error::InvalidArgument(format!("transition row {i} does not sum to 1")));
            }
        }
        Ok(Self { matrix, teleport })
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn teleport(&self) -> T {
        self.teleport
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// One affinity per frontal slice: `W_v = (|C_v| + |C_v|ᵀ) / 2`.
pub fn affinity_from_c<T: Real>(c: &Tensor3<T>) -> Result<Vec<AffinityMatrix<T>>> {
    let (n1, n2, n3) = c.dims();
    if n1 != n2 {
        return Err(dim_mismatch("affinity_from_c", format!("frontal slices are {n1}x{n2}")));
    }
    Ok((0..n3)
        .map(|v| {
            let s = c.frontal_slice_view(v);
            let half = T::lit(0.5);
            AffinityMatrix(DMatrix::from_fn(n1, n1, |i, j| (s[(i, j)].abs() + s[(j, i)].abs()) * half))
        })
        .collect())
}

/// Averages the degree-normalized views, then mixes in `teleport` of the
/// uniform chain. Rows with zero degree become uniform.
pub fn transition_aggregate<T: Real>(ws: &[AffinityMatrix<T>], teleport: T) -> Result<TransitionMatrix<T>> {
    let first = ws
        .first()
        .ok_or_else(|| Error::InvalidArgument("no affinity matrices to aggregate".into()))?;
    if !(teleport >= T::zero() && teleport < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "teleport must lie in [0, 1), got {}",
            teleport.as_f64()
        )));
    }
    let n = first.n();
    if let Some(w) = ws.iter().find(|w| w.n() != n) {
        return Err(dim_mismatch("transition_aggregate", format!("affinities of size {n} and {}", w.n())));
    }
    let uniform = T::one() / T::from_count(n);
    let view_weight = T::one() / T::from_count(ws.len());
    let mut p = DMatrix::zeros(n, n);
    for w in ws {
        let w = w.as_matrix();
        for i in 0..n {
            let degree = w.row(i).sum();
            if degree > T::zero() {
                let scale = view_weight / degree;
                for j in 0..n {
                    p[(i, j)] += w[(i, j)] * scale;
                }
            } else {
                for j in 0..n {
                    p[(i, j)] += view_weight * uniform;
                }
            }
        }
    }
    let keep = T::one() - teleport;
    p.apply(|x| *x = keep * *x + teleport * uniform);
    // Renormalize away accumulated rounding so rows are stochastic to the last ulp.
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    TransitionMatrix::new(p, teleport)
}

/// Spectral embedding of a Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T: Real> {
    /// `n × m`, one row per sample.
    pub coords: DMatrix<T>,
    /// Top `m` eigenvalues of the symmetrized chain, descending.
    pub eigenvalues: Vec<T>,
    pub stationary: DVector<T>,
    pub power_iterations: usize,
}

/// Stationary distribution by power iteration from the uniform vector.
pub fn stationary_distribution<T: Real>(p: &TransitionMatrix<T>) -> Result<(DVector<T>, usize)> {
    let n = p.n();
    let pt = p.as_matrix().transpose();
    // 1e-10 is below f32 resolution; scale to the working precision.
    let tol = T::lit(1e-10).max(T::from_count(n) * T::default_epsilon() * T::lit(4.0));
    let mut pi = DVector::from_element(n, T::one() / T::from_count(n));
    for it in 1..=MAX_POWER_ITERATIONS {
        let mut next = &pt * &pi;
        let s = next.sum();
        next /= s;
        let delta = (&next - &pi).lp_norm(1);
        pi = next;
        if delta <= tol {
            return Ok((pi, it));
        }
    }
    Err(Error::PowerIterationFailed(MAX_POWER_ITERATIONS))
}

/// The `m` leading eigenvectors of
/// `L = (Π^½ P Π^-½ + Π^-½ Pᵀ Π^½) / 2`, with `Π = diag(π)`.
pub fn markov_spectral_embed<T: Real>(p: &TransitionMatrix<T>, m: usize, normalize_rows: bool) -> Result<Embedding<T>> {
    let n = p.n();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("embedding dimension {m} out of range for n = {n}")));
    }
    let (pi, power_iterations) = stationary_distribution(p)?;
    if pi.iter().any(|&x| x <= T::zero()) {
        return Err(Error::InvalidArgument(
            "stationary distribution has zero mass; the chain is not irreducible".into(),
        ));
    }
    let sqrt_pi = pi.map(|x| x.sqrt());
    let pm = p.as_matrix();
    let half = T::lit(0.5);
    let l = DMatrix::from_fn(n, n, |i, j| {
        let a = sqrt_pi[i] * pm[(i, j)] / sqrt_pi[j];
        let b = sqrt_pi[j] * pm[(j, i)] / sqrt_pi[i];
        (a + b) * half
    });
    let eig = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let mut coords = DMatrix::zeros(n, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (slot, &idx) in order.iter().take(m).enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        // Deterministic sign: the largest-magnitude entry is positive.
        let pivot = v.iamax();
        if v[pivot] < T::zero() {
            v.neg_mut();
        }
        coords.set_column(slot, &v);
        eigenvalues.push(eig.eigenvalues[idx]);
    }
    if normalize_rows {
        for mut row in coords.row_iter_mut() {
            let norm = row.norm();
            if norm > T::zero() {
                row /= norm;
            }
        }
    }
    Ok(Embedding {
        coords,
        eigenvalues,
        stationary: pi,
        power_iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub teleport: f64,
    pub normalize_rows: bool,
    /// Independent k-means runs; each is reported separately.
    pub trials: usize,
    /// k-means++ restarts inside each trial.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            teleport: 0.01,
            normalize_rows: true,
            trials: 20,
            restarts: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTrials<T: Real> {
    pub embedding: Embedding<T>,
    pub transition: TransitionMatrix<T>,
    pub trials: Vec<KMeansResult<T>>,
}

impl<T: Real> ClusterTrials<T> {
    /// Trial with the lowest WCSS, ties to the earliest.
    pub fn best(&self) -> &KMeansResult<T> {
        self.trials
            .iter()
            .reduce(|best, t| if t.wcss < best.wcss { t } else { best })
            .expect("at least one trial")
    }
}

/// Affinity → transition → embedding once, then `cfg.trials` k-means runs
/// on the same embedding with derived seeds.
pub fn cluster_trials<T: Real>(c: &Tensor3<T>, clusters: usize, cfg: &SpectralConfig) -> Result<ClusterTrials<T>> {
    if cfg.trials == 0 {
        return Err(Error::EmptyTrials);
    }
    let ws = affinity_from_c(c)?;
    let transition = transition_aggregate(&ws, T::lit(cfg.teleport))?;
    let embedding = markov_spectral_embed(&transition, clusters, cfg.normalize_rows)?;
    let trials = (0..cfg.trials)
        .map(|t| kmeans(&embedding.coords, clusters, cfg.restarts, derive_seed(cfg.seed, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterTrials {
        embedding,
        transition,
        trials,
    })
}

/// Labels of the lowest-WCSS trial.
pub fn cluster_pipeline<T: Real>(c: &Tensor3<T>, clusters: usize, cfg: &SpectralConfig) -> Result<Vec<usize>> {
    Ok(cluster_trials(c, clusters, cfg)?.best().labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affinity_abs_and_symmetrize() {
        let mut c = Tensor3::<f64>::zeros(2, 2, 1);
        c[(0, 1, 0)] = -2.0;
        let w = affinity_from_c(&c).unwrap();
        assert_eq!(w[0].as_matrix(), &DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));
    }

    #[test]
    fn identity_affinity_gives_identity_chain() {
        let w = AffinityMatrix::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        let p = transition_aggregate(&[w], 0.0).unwrap();
        assert_eq!(p.as_matrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn zero_degree_rows_are_uniform() {
        let w = AffinityMatrix::new(DMatrix::<f64>::zeros(4, 4)).unwrap();
        let p = transition_aggregate(&[w], 0.01).unwrap();
        for x in p.as_matrix().iter() {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_teleport_and_asymmetry() {
        let w = AffinityMatrix::new(DMatrix::<f64>::identity(2, 2)).unwrap();
        assert!(transition_aggregate(std::slice::from_ref(&w), 1.0).is_err());
        assert!(transition_aggregate(&[w], -0.1).is_err());
        assert!(AffinityMatrix::new(DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.])).is_err());
        assert!(AffinityMatrix::new(DMatrix::from_row_slice(2, 2, &[-1., 0., 0., 0.])).is_err());
    }

    #[test]
    fn identity_chain_embeds_with_unit_eigenvalues() {
        let p = TransitionMatrix::new(DMatrix::<f64>::identity(4, 4), 0.0).unwrap();
        let e = markov_spectral_embed(&p, 3, false).unwrap();
        for &lam in &e.eigenvalues {
            assert!((lam - 1.0).abs() < 1e-12);
        }
        for &x in e.stationary.iter() {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn block_indicator_recovers_partition() {
        let c = Tensor3::from_fn(6, 6, 2, |i, j, _| if (i < 3) == (j < 3) { 1.0 } else { 0.0 });
        let labels = cluster_pipeline(&c, 2, &SpectralConfig::default()).unwrap();
        assert!(labels[..3].iter().all(|&l| l == labels[0]));
        assert!(labels[3..].iter().all(|&l| l == labels[3]));
        assert_ne!(labels[0], labels[3]);
    }
}
