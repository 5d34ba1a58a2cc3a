//! Built-in oracle checks that can be run from an installed binary: the two
//! t-product paths against each other, sampled optimality of the proximal
//! operators, and the metrics against brute-force enumeration.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::metrics::{accuracy, ari, pair_scores};
use crate::prox::{prox_f1, prox_tnn, ShrinkageThreshold};
use crate::tensor3::{norm_f1, norm_fro, norm_tnn, tproduct, tproduct_reference_impl, Tensor3};

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Corrupts the block-circulant reference so the t-product suite must fail.
    pub inject_bcirc_fault: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteReport>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

fn gaussian_tensor(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3<f64> {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.sample(StandardNormal))
}

type Objective = Box<dyn Fn(&Tensor3<f64>) -> Result<f64>>;

fn suite(name: &'static str, body: impl FnOnce() -> Result<(usize, usize, String)>) -> SuiteReport {
    let start = Instant::now();
    let (passed, checks, failures, detail) = match body() {
        Ok((checks, failures, detail)) => (failures == 0, checks, failures, detail),
        Err(e) => (false, 0, 1, format!("error: {e}")),
    };
    SuiteReport {
        name,
        passed,
        checks,
        failures,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn tproduct_suite(rng: &mut ChaCha8Rng, fault: bool) -> Result<(usize, usize, String)> {
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let instances = 100;
    for _ in 0..instances {
        let (n1, n2, n4) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let n3 = rng.random_range(2..=6);
        let a = gaussian_tensor(rng, n1, n2, n3);
        let b = gaussian_tensor(rng, n2, n4, n3);
        let fast = tproduct(&a, &b)?;
        let slow = tproduct_reference_impl(&a, &b, fault)?;
        let err = norm_fro(&(&fast - &slow)) / norm_fro(&slow).max(f64::MIN_POSITIVE);
        worst = worst.max(err);
        if !(err <= 1e-10) {
            failures += 1;
        }
    }
    Ok((instances, failures, format!("max relative error {worst:.3e}")))
}

fn prox_suite(rng: &mut ChaCha8Rng) -> Result<(usize, usize, String)> {
    let inputs = 20;
    let perturbations = 100;
    let mut checks = 0;
    let mut failures = 0;
    let mut worst_margin = f64::INFINITY;
    for case in 0..inputs {
        let (n1, n2, n3) = (rng.random_range(1..=5), rng.random_range(1..=5), rng.random_range(1..=4));
        let a = gaussian_tensor(rng, n1, n2, n3);
        let tau: f64 = rng.random_range(0.05..2.0);
        let th = ShrinkageThreshold::new(tau)?;
        // prox_tnn(A, τ) minimizes (τ/n3)·TNN(Z) + ½‖Z − A‖² (unnormalized TNN).
        let (out, objective): (Tensor3<f64>, Objective) = if case % 2 == 0 {
            let a2 = a.clone();
            (
                prox_tnn(&a, th)?,
                Box::new(move |z| Ok(tau / n3 as f64 * norm_tnn(z)? + 0.5 * norm_fro(&(z - &a2)).powi(2))),
            )
        } else {
            let a2 = a.clone();
            (prox_f1(&a, th), Box::new(move |z| Ok(tau * norm_f1(z) + 0.5 * norm_fro(&(z - &a2)).powi(2))))
        };
        let at_out = objective(&out)?;
        let mut check = |candidate: &Tensor3<f64>| -> Result<()> {
            let margin = objective(candidate)? - at_out;
            worst_margin = worst_margin.min(margin);
            checks += 1;
            if margin < 0.0 {
                failures += 1;
            }
            Ok(())
        };
        check(&a)?;
        for p in 0..perturbations {
            let scale = 10f64.powi(-(p % 4) - 1);
            let delta = gaussian_tensor(rng, n1, n2, n3);
            check(&(&out + &(&delta * scale)))?;
        }
    }
    Ok((checks, failures, format!("smallest objective margin {worst_margin:.3e}")))
}

/// Precision, recall and ARI by enumerating all pairs, plus whether both
/// partitions are all singletons.
fn brute_pairs(t: &[usize], p: &[usize]) -> (f64, f64, f64, bool) {
    let n = t.len();
    let (mut tp, mut same_t, mut same_p, mut total) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let st = t[i] == t[j];
            let sp = p[i] == p[j];
            total += 1;
            same_t += st as u64;
            same_p += sp as u64;
            tp += (st && sp) as u64;
        }
    }
    let (tp, st, sp, tot) = (tp as f64, same_t as f64, same_p as f64, total as f64);
    let precision = if sp == 0.0 { 0.0 } else { tp / sp };
    let recall = if st == 0.0 { 0.0 } else { tp / st };
    let expected = st * sp / tot;
    let max = (st + sp) / 2.0;
    let ari = if max == expected { 1.0 } else { (tp - expected) / (max - expected) };
    (precision, recall, ari, sp == 0.0 && st == 0.0)
}

fn brute_accuracy(t: &[usize], p: &[usize], c: usize) -> f64 {
    fn permute(perm: &mut Vec<usize>, k: usize, best: &mut usize, t: &[usize], p: &[usize]) {
        if k == perm.len() {
            let hits = t.iter().zip(p).filter(|(&a, &b)| perm[b] == a).count();
            *best = (*best).max(hits);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, best, t, p);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut best, t, p);
    best as f64 / t.len() as f64
}

fn metrics_suite(rng: &mut ChaCha8Rng) -> Result<(usize, usize, String)> {
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let cases = 200;
    for _ in 0..cases {
        let n = rng.random_range(2..=12);
        let c = rng.random_range(1..=5);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let (precision, recall, ari_ref, singletons) = brute_pairs(&t, &p);
        let ps = pair_scores(&t, &p)?;
        let (precision, recall) = if singletons { (1.0, 1.0) } else { (precision, recall) };
        let errs = [
            ps.precision - precision,
            ps.recall - recall,
            ari(&t, &p)? - ari_ref,
            accuracy(&t, &p)? - brute_accuracy(&t, &p, c),
        ];
        let e = errs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        worst = worst.max(e);
        if e > 1e-12 {
            failures += 1;
        }
    }
    Ok((cases, failures, format!("max deviation {worst:.3e}")))
}

pub fn run(options: &SelftestOptions) -> SelftestReport {
    let rng = |stream| {
        let mut r = ChaCha8Rng::seed_from_u64(options.seed);
        r.set_stream(stream);
        r
    };
    let suites = vec![
        suite("tproduct", || tproduct_suite(&mut rng(0), options.inject_bcirc_fault)),
        suite("prox", || prox_suite(&mut rng(1))),
        suite("metrics", || metrics_suite(&mut rng(2))),
    ];
    SelftestReport { suites }
}
