mod common;

use common::*;
use nalgebra::DMatrix;
use tensor_mvsc::construct::{build_tensor, synth_generate, SynthParams};
use tensor_mvsc::error::Error;
use tensor_mvsc::prox::{prox_f1, ShrinkageThreshold};
use tensor_mvsc::solver::*;
use tensor_mvsc::tensor3::{identity_tensor, tproduct};
use tensor_mvsc::Tensor3;

fn cfg() -> SolverConfig<f64> {
    SolverConfig::default()
}

fn synth_x(seed: u64) -> Tensor3<f64> {
    let ds = synth_generate::<f64>(&SynthParams { seed, ..SynthParams::default() }).unwrap();
    build_tensor(&ds, true)
}

fn random_state(r: &mut rand_chacha::ChaCha8Rng, n: usize, k: usize, rho: f64) -> SolverState<f64> {
    let mut s = SolverState::zeros(n, k, rho);
    s.y = gaussian(r, n, n, k);
    s.z = gaussian(r, n, n, k);
    s.g1 = gaussian(r, n, n, k);
    s.g2 = gaussian(r, n, n, k);
    s
}

fn max_abs_diff(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn single_view_c_update_matches_dense_normal_equations() {
    let mut r = rng(1);
    let (d, n, rho) = (7, 5, 0.3);
    let x = gaussian(&mut r, d, n, 1);
    let system = FourierSystem::new(&x);
    let mut state = random_state(&mut r, n, 1, rho);
    let c = SolverConfig { beta: 0.0, max_inner: 1, inner_stop: InnerStop::Gap, ..cfg() };
    update_c(&system, &mut state, &c).unwrap();

    let xm = x.frontal_slice(0);
    let g = xm.tr_mul(&xm);
    let p = &state.y.frontal_slice(0) + &state.z.frontal_slice(0) + (&state.g1.frontal_slice(0) + &state.g2.frontal_slice(0)) / rho;
    let lhs = &g + DMatrix::identity(n, n) * (c.tau + 2.0 * rho);
    let expected = lhs.lu().solve(&(&g + p * rho)).unwrap();
    assert!((state.c.frontal_slice(0) - expected).norm() < 1e-10);
}

#[test]
fn two_view_first_inner_step_matches_real_fourier_oracle() {
    // For k = 2 both spectral slices are real: X0 + X1 and X0 − X1.
    let mut r = rng(2);
    let (d, n, rho, beta) = (6, 4, 0.5, 1.7);
    let x = gaussian(&mut r, d, n, 2);
    let system = FourierSystem::new(&x);
    let mut state = random_state(&mut r, n, 2, rho);
    let c = SolverConfig { beta, max_inner: 1, inner_stop: InnerStop::Gap, ..cfg() };
    let p: Tensor3<f64> = Tensor3::from_fn(n, n, 2, |i, j, l| {
        state.y[(i, j, l)] + state.z[(i, j, l)] + (state.g1[(i, j, l)] + state.g2[(i, j, l)]) / rho
    });
    update_c(&system, &mut state, &c).unwrap();

    let hat = |t: &Tensor3<f64>, sign: f64| t.frontal_slice(0) + t.frontal_slice(1) * sign;
    let mut c_hat = Vec::new();
    for sign in [1.0, -1.0] {
        let xs = hat(&x, sign);
        let g = xs.tr_mul(&xs);
        let lhs = &g + DMatrix::identity(n, n) * (beta + c.tau + 2.0 * rho);
        c_hat.push(lhs.lu().solve(&(&g + hat(&p, sign) * rho)).unwrap());
    }
    let c0 = (&c_hat[0] + &c_hat[1]) / 2.0;
    let c1 = (&c_hat[0] - &c_hat[1]) / 2.0;
    assert!((state.c.frontal_slice(0) - c0).norm() < 1e-10);
    assert!((state.c.frontal_slice(1) - c1).norm() < 1e-10);
}

#[test]
fn gram_cache_agrees_with_fresh_factorization() {
    let mut r = rng(3);
    let x = gaussian(&mut r, 8, 6, 5);
    let system = FourierSystem::new(&x);
    let base = random_state(&mut r, 6, 5, 0.2);
    let (mut a, mut b) = (base.clone(), base);
    update_c(&system, &mut a, &SolverConfig { max_inner: 10, ..cfg() }).unwrap();
    update_c(&system, &mut b, &SolverConfig { max_inner: 10, gram_cache: false, ..cfg() }).unwrap();
    assert!(max_abs_diff(&a.c, &b.c) < 1e-9);
}

#[test]
fn consensus_pulls_spectral_slices_together() {
    // Views with genuinely different Fourier grams, so β is not idle.
    let mut r = rng(4);
    let x = gaussian(&mut r, 6, 5, 3);
    let system = FourierSystem::new(&x);
    let base = random_state(&mut r, 5, 3, 0.5);
    let mut spreads = Vec::new();
    for beta in [0.0, 1.0, 100.0] {
        let mut s = base.clone();
        let c = SolverConfig { beta, max_inner: 5000, inner_tol: 1e-10, ..cfg() };
        let trace = update_c(&system, &mut s, &c).unwrap();
        spreads.push(*trace.spectral_spread.last().unwrap());
    }
    assert!(spreads[1] < spreads[0] && spreads[2] < spreads[1], "{spreads:?}");
    assert!(spreads[2] < 0.1 * spreads[0], "{spreads:?}");
}

#[test]
fn without_consensus_a_first_slice_problem_reduces_to_a_single_view() {
    // With only the first frontal slice nonzero, every iterate stays in the
    // first slice and the TNN weight scales by k. The inner solves are run
    // to near machine precision so that their early exits cannot differ.
    let k = 3;
    let base = synth_x(5);
    let (d, n, _) = base.dims();
    let x = Tensor3::from_fn(d, n, k, |i, j, l| if l == 0 { base[(i, j, 0)] } else { 0.0 });
    let x1 = Tensor3::from_frontal_slices(&[base.frontal_slice(0)]).unwrap();
    let c = SolverConfig { beta: 0.0, inner_tol: 1e-13, max_inner: 20000, ..cfg() };
    let full = solve(&x, &c).unwrap();
    let single = solve(&x1, &SolverConfig { lambda: c.lambda * k as f64, ..c.clone() }).unwrap();
    assert_eq!(full.trace.iterations(), single.trace.iterations());
    assert!((full.c.frontal_slice(0) - single.c.frontal_slice(0)).amax() < 1e-8);
    for l in 1..k {
        assert!(full.c.frontal_slice(l).amax() < 1e-8);
    }
}

#[test]
fn solve_is_bitwise_deterministic() {
    let x = synth_x(6);
    let a = solve(&x, &cfg()).unwrap();
    let b = solve(&x, &cfg()).unwrap();
    assert_eq!(a.trace, b.trace);
    assert!(a.c.as_slice().iter().zip(b.c.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn objective_matches_component_oracle() {
    let mut r = rng(7);
    let x = gaussian(&mut r, 5, 4, 3);
    let c = gaussian(&mut r, 4, 4, 3);
    let conf = SolverConfig { alpha: 0.3, lambda: 0.7, beta: 1.3, ..cfg() };
    let residual = &x - &tproduct_conv(&x, &c);
    let mut consensus = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                consensus += (c.frontal_slice(i) - c.frontal_slice(j)).norm_squared();
            }
        }
    }
    let expected = 0.3 * f1_oracle(&c) + 0.7 * tnn_oracle(&c) + 0.5 * fro(&residual).powi(2) + 0.5 * 1.3 * consensus;
    let got = objective(&x, &c, &conf).unwrap();
    assert!((got - expected).abs() < 1e-10 * expected);
    assert!((consensus_penalty(&c) - consensus).abs() < 1e-10 * consensus);
}

#[test]
fn unregularized_single_view_fits_the_data() {
    // Without regularizers the only pull on C is the fit; a slower penalty
    // growth leaves ADMM more iterations to reduce it before C freezes.
    let x = Tensor3::from_frontal_slices(&[synth_x(8).frontal_slice(0)]).unwrap();
    let mut fits = Vec::new();
    for mu in [1.9, 1.3, 1.1] {
        let c = SolverConfig { alpha: 0.0, lambda: 0.0, beta: 0.0, mu, ..cfg() };
        let out = solve(&x, &c).unwrap();
        assert!(out.trace.converged() && out.state.is_finite());
        fits.push((&x - &tproduct(&x, &out.c).unwrap()).fro_norm_sq() / x.fro_norm_sq());
    }
    assert!(fits[0] < 1e-3, "{fits:?}");
    assert!(fits[1] < fits[0] && fits[2] < fits[1], "{fits:?}");
}

#[test]
fn converged_runs_satisfy_the_stopping_rule() {
    for seed in 0..3 {
        let out = solve(&synth_x(seed), &cfg()).unwrap();
        assert!(out.trace.converged());
        let res = out.trace.final_residuals().unwrap();
        assert!(res.max() <= cfg().eps);
        assert!(out.state.is_finite());
        assert_eq!(out.state.iteration, out.trace.iterations());
        // ρ grows geometrically until it hits the cap.
        for w in out.trace.records.windows(2) {
            assert!(w[1].rho >= w[0].rho);
        }
    }
}

#[test]
fn iteration_cap_reports_not_converged() {
    let out = solve(&synth_x(0), &SolverConfig { max_outer: 2, ..cfg() }).unwrap();
    assert_eq!(out.trace.status, SolveStatus::NotConverged);
    assert_eq!(out.trace.iterations(), 2);
}

#[test]
fn z_update_shrinks_a_scaled_identity() {
    let (n, k, s, rho, lambda) = (3, 4, 2.0, 4.0, 0.5);
    let c = identity_tensor::<f64>(n, k).scale(s);
    let z = update_z(&c, &Tensor3::zeros(n, n, k), rho, lambda).unwrap();
    let expected = identity_tensor(n, k).scale(s - k as f64 * lambda / rho);
    assert!(max_abs_diff(&z, &expected) < 1e-12);
    let gone = update_z(&c, &Tensor3::zeros(n, n, k), rho, 100.0).unwrap();
    assert!(gone.max_abs() < 1e-12);
}

#[test]
fn y_update_is_tube_shrinkage_of_the_shifted_point() {
    let mut r = rng(9);
    let c = gaussian(&mut r, 3, 3, 2);
    let g1 = gaussian(&mut r, 3, 3, 2);
    let (rho, alpha) = (2.0, 0.8);
    let y = update_y(&c, &g1, rho, alpha).unwrap();
    let shifted = c.zip_map(&g1, |a, g| a - g / rho);
    assert_eq!(y, prox_f1(&shifted, ShrinkageThreshold::new(alpha / rho).unwrap()));
}

#[test]
fn dual_update_follows_the_ascent_rule() {
    let mut r = rng(10);
    let mut s = random_state(&mut r, 3, 2, 0.4);
    s.c = gaussian(&mut r, 3, 3, 2);
    let before = s.clone();
    let conf = SolverConfig { mu: 1.5, rho_max: 0.5, ..cfg() };
    update_duals(&mut s, &conf);
    for idx in 0..before.c.as_slice().len() {
        let (c, y, z) = (before.c.as_slice()[idx], before.y.as_slice()[idx], before.z.as_slice()[idx]);
        assert!((s.g1.as_slice()[idx] - (before.g1.as_slice()[idx] + 0.4 * (y - c))).abs() < 1e-14);
        assert!((s.g2.as_slice()[idx] - (before.g2.as_slice()[idx] + 0.4 * (z - c))).abs() < 1e-14);
    }
    assert_eq!(s.rho, 0.5);

    let mut g = before.clone();
    update_duals(&mut g, &SolverConfig { dual_step: DualStep::Growth, ..conf });
    let expected = before.g1.as_slice()[0] + 1.5 * (before.y.as_slice()[0] - before.c.as_slice()[0]);
    assert!((g.g1.as_slice()[0] - expected).abs() < 1e-14);
}

#[test]
fn convergence_residuals_follow_their_definitions() {
    let ones = Tensor3::from_fn(2, 2, 1, |_, _, _| 1.0);
    let twos = ones.scale(2.0);
    let zero = Tensor3::zeros(2, 2, 1);
    let (ok, res) = check_convergence(
        Iterate { c: &ones, y: &ones, z: &zero },
        Iterate { c: &twos, y: &ones, z: &zero },
        4.0,
        1e-6,
    );
    assert!(!ok);
    // ‖Z − C‖ = 4, ‖Y − C‖ = 2, Z unchanged from zero, Y unchanged, C doubled.
    assert_eq!(res.as_array(), [1.0, 0.5, 0.0, 0.0, 1.0]);
    assert_eq!(res.max(), 1.0);

    let (ok, res) = check_convergence(
        Iterate { c: &ones, y: &ones, z: &ones },
        Iterate { c: &ones, y: &ones, z: &ones },
        1.0,
        1e-12,
    );
    assert!(ok);
    assert_eq!(res.max(), 0.0);

    // Moving away from an all-zero iterate is a full relative change.
    let (_, res) = check_convergence(
        Iterate { c: &zero, y: &zero, z: &zero },
        Iterate { c: &ones, y: &ones, z: &ones },
        1.0,
        1e-6,
    );
    assert_eq!((res.dz, res.dy, res.dc), (1.0, 1.0, 1.0));
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(matches!(solve(&Tensor3::<f64>::zeros(3, 4, 2), &cfg()), Err(Error::InvalidArgument(_))));
    let mut x = synth_x(0);
    x[(0, 0, 0)] = f64::NAN;
    assert!(matches!(solve(&x, &cfg()), Err(Error::NonFinite(_))));
    assert!(solve(&synth_x(0), &SolverConfig { eps: 0.0, ..cfg() }).is_err());
}

#[test]
fn duplicated_sample_is_its_own_strongest_neighbour() {
    let ds = synth_generate::<f64>(&SynthParams::default()).unwrap();
    let views: Vec<DMatrix<f64>> = ds
        .views()
        .iter()
        .map(|v| {
            let mut m = v.clone().insert_column(v.ncols(), 0.0);
            let first = v.column(0).into_owned();
            m.set_column(v.ncols(), &first);
            m
        })
        .collect();
    let dup = tensor_mvsc::construct::MultiViewDataset::new(views, None).unwrap();
    let x = build_tensor(&dup, true);
    let out = solve(&x, &cfg()).unwrap();
    let n = x.dims().1;
    let twin = n - 1;
    let affinity = |i: usize, j: usize| {
        (0..x.dims().2)
            .map(|l| out.c[(i, j, l)].abs() + out.c[(j, i, l)].abs())
            .sum::<f64>()
    };
    let best = (1..n).max_by(|&a, &b| affinity(0, a).total_cmp(&affinity(0, b))).unwrap();
    assert_eq!(best, twin);
}
