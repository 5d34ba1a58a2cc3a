//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_mvsc::Tensor3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3<f64> {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn rel_err(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.as_slice().iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn fro(a: &Tensor3<f64>) -> f64 {
    a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// t-product as circular convolution of tubes, straight from the sum.
pub fn tproduct_conv(a: &Tensor3<f64>, b: &Tensor3<f64>) -> Tensor3<f64> {
    let (n1, n2, n3) = a.dims();
    let (_, n4, _) = b.dims();
    Tensor3::from_fn(n1, n4, n3, |i, j, l| {
        let mut s = 0.0;
        for k in 0..n2 {
            for m in 0..n3 {
                s += a[(i, k, m)] * b[(k, j, (l + n3 - m) % n3)];
            }
        }
        s
    })
}

/// Direct DFT of one tube: `X_f = Σ_t x_t e^{-2πi f t / n}`.
pub fn dft(tube: &[f64]) -> Vec<Complex<f64>> {
    let n = tube.len();
    (0..n)
        .map(|f| {
            tube.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (t, &x)| {
                let ang = -2.0 * std::f64::consts::PI * (f * t) as f64 / n as f64;
                acc + Complex::new(ang.cos(), ang.sin()) * x
            })
        })
        .collect()
}

/// Spectral frontal slices of `a` via the direct DFT.
pub fn dft_slices(a: &Tensor3<f64>) -> Vec<DMatrix<Complex<f64>>> {
    let (n1, n2, n3) = a.dims();
    let mut out = vec![DMatrix::zeros(n1, n2); n3];
    for i in 0..n1 {
        for j in 0..n2 {
            for (l, z) in dft(&a.tube(i, j)).into_iter().enumerate() {
                out[l][(i, j)] = z;
            }
        }
    }
    out
}

/// TNN via the direct DFT and a complex SVD per slice.
pub fn tnn_oracle(a: &Tensor3<f64>) -> f64 {
    dft_slices(a).into_iter().map(|s| s.singular_values().sum()).sum()
}

pub fn f1_oracle(a: &Tensor3<f64>) -> f64 {
    let (n1, n2, n3) = a.dims();
    let mut total = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let mut s = 0.0;
            for l in 0..n3 {
                s += a[(i, j, l)] * a[(i, j, l)];
            }
            total += s.sqrt();
        }
    }
    total
}

pub fn ff1_oracle(a: &Tensor3<f64>) -> f64 {
    let (n1, n2, n3) = a.dims();
    let mut total = 0.0;
    for i in 0..n1 {
        let mut s = 0.0;
        for j in 0..n2 {
            for l in 0..n3 {
                s += a[(i, j, l)] * a[(i, j, l)];
            }
        }
        total += s.sqrt();
    }
    total
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..c)).collect()
}

/// Precision, recall and ARI by enumerating all unordered pairs.
pub fn brute_pairs(t: &[usize], p: &[usize]) -> (f64, f64, f64) {
    let n = t.len();
    let (mut tp, mut st, mut sp, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let a = t[i] == t[j];
            let b = p[i] == p[j];
            total += 1.0;
            st += a as u8 as f64;
            sp += b as u8 as f64;
            tp += (a && b) as u8 as f64;
        }
    }
    let expected = st * sp / total;
    let max = (st + sp) / 2.0;
    let ari = if max == expected { 1.0 } else { (tp - expected) / (max - expected) };
    if st == 0.0 && sp == 0.0 {
        return (1.0, 1.0, ari);
    }
    let precision = if sp == 0.0 { 0.0 } else { tp / sp };
    let recall = if st == 0.0 { 0.0 } else { tp / st };
    (precision, recall, ari)
}

/// Best matching accuracy by trying every injective relabeling of `p`.
pub fn brute_accuracy(t: &[usize], p: &[usize]) -> f64 {
    let c = t.iter().chain(p).max().map_or(0, |m| m + 1);
    fn go(perm: &mut Vec<usize>, k: usize, best: &mut usize, t: &[usize], p: &[usize]) {
        if k == perm.len() {
            *best = (*best).max(t.iter().zip(p).filter(|(a, b)| perm[**b] == **a).count());
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(perm, k + 1, best, t, p);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best = 0;
    go(&mut perm, 0, &mut best, t, p);
    best as f64 / t.len() as f64
}

/// NMI from entropies: `(H(T) + H(P) − H(T,P)) / sqrt(H(T)·H(P))`.
pub fn nmi_oracle(t: &[usize], p: &[usize]) -> f64 {
    use std::collections::HashMap;
    fn h<K: std::hash::Hash + Eq>(items: impl Iterator<Item = K>, n: f64) -> f64 {
        let mut counts: HashMap<K, f64> = HashMap::new();
        for k in items {
            *counts.entry(k).or_default() += 1.0;
        }
        counts.values().map(|&c| -(c / n) * (c / n).ln()).sum()
    }
    let n = t.len() as f64;
    let ht = h(t.iter(), n);
    let hp = h(p.iter(), n);
    let joint = h(t.iter().zip(p), n);
    match (ht == 0.0, hp == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => ((ht + hp - joint) / (ht * hp).sqrt()).clamp(0.0, 1.0),
    }
}
