//! Lloyd's k-means with k-means++ seeding and restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub labels: Vec<usize>,
    /// `c × m`, one centroid per row.
    pub centroids: DMatrix<T>,
    /// Within-cluster sum of squares of the returned partition.
    pub wcss: T,
    /// Index of the restart that produced this result.
    pub restart: usize,
    /// WCSS after every assignment step of the winning restart.
    pub history: Vec<T>,
}

/// SplitMix64 step, used to derive independent per-trial seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sq_dist<T: Real>(points: &DMatrix<T>, i: usize, centroids: &DMatrix<T>, c: usize) -> T {
    let mut s = T::zero();
    for d in 0..points.ncols() {
        let diff = points[(i, d)] - centroids[(c, d)];
        s += diff * diff;
    }
    s
}

fn plus_plus_seeding<T: Real>(points: &DMatrix<T>, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let (n, m) = points.shape();
    let mut centroids = DMatrix::zeros(c, m);
    let first = rng.random_range(0..n);
    centroids.set_row(0, &points.row(first));
    let mut best: Vec<T> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    for k in 1..c {
        let total = best.iter().fold(T::zero(), |a, &d| a + d);
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut chosen = n - 1;
            for (i, &d) in best.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.set_row(k, &points.row(pick));
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(points, i, &centroids, k));
        }
    }
    centroids
}

/// Returns the WCSS of the new assignment and whether any label changed.
fn assign<T: Real>(points: &DMatrix<T>, centroids: &DMatrix<T>, labels: &mut [usize]) -> (T, bool) {
    let mut changed = false;
    let mut wcss = T::zero();
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best_c = 0;
        let mut best_d = sq_dist(points, i, centroids, 0);
        for c in 1..centroids.nrows() {
            let d = sq_dist(points, i, centroids, c);
            if d < best_d {
                best_d = d;
                best_c = c;
            }
        }
        if *label != best_c {
            changed = true;
            *label = best_c;
        }
        wcss += best_d;
    }
    (wcss, changed)
}

fn lloyd<T: Real>(points: &DMatrix<T>, c: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, DMatrix<T>, Vec<T>) {
    let (n, m) = points.shape();
    let mut centroids = plus_plus_seeding(points, c, rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let (wcss, changed) = assign(points, &centroids, &mut labels);
        history.push(wcss);
        if !changed {
            break;
        }
        let mut sums = DMatrix::<T>::zeros(c, m);
        let mut counts = vec![0usize; c];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for d in 0..m {
                sums[(l, d)] += points[(i, d)];
            }
        }
        for k in 0..c {
            if counts[k] > 0 {
                let inv = T::one() / T::from_count(counts[k]);
                for d in 0..m {
                    centroids[(k, d)] = sums[(k, d)] * inv;
                }
            }
        }
        // Empty clusters take over the point farthest from its own centroid.
        for k in 0..c {
            if counts[k] == 0 {
                let far = (0..n)
                    .map(|i| (i, sq_dist(points, i, &centroids, labels[i])))
                    .fold((0, T::zero() - T::one()), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
                centroids.set_row(k, &points.row(far.0));
            }
        }
    }
    (labels, centroids, history)
}

/// Clusters the rows of `points` into `c` groups, keeping the restart with
/// the lowest WCSS (ties go to the lower restart index).
pub fn kmeans<T: Real>(points: &DMatrix<T>, c: usize, restarts: usize, seed: u64) -> Result<KMeansResult<T>> {
    let n = points.nrows();
    if c == 0 || c > n {
        return Err(Error::InvalidArgument(format!("cannot form {c} clusters from {n} points")));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("k-means needs at least one restart".into()));
    }
    let runs: Vec<KMeansResult<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let (labels, centroids, history) = lloyd(points, c, &mut rng);
            let wcss = *history.last().expect("at least one assignment step");
            KMeansResult {
                labels,
                centroids,
                wcss,
                restart: r,
                history,
            }
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.wcss < best.wcss { run } else { best })
        .expect("restarts >= 1"))
}
