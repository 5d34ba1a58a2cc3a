//! Two-level ADMM for the sparse + low-rank self-representation problem.
//!
//! Outer loop (auxiliaries `Y = C`, `Z = C`, multipliers `G1`, `G2`):
//!
//! 1. `Z ← prox_TNN(C − G2/ρ)` with spectral threshold `n3·λ/ρ`
//! 2. `Y ← prox_F1(C − G1/ρ)` with threshold `α/ρ`
//! 3. `C ←` inner ADMM over the Fourier slices (see [`update_c`])
//! 4. `G1 += ρ(Y − C)`, `G2 += ρ(Z − C)`, `ρ ← min(ρ_max, μρ)`
//! 5. stop when all five relative residuals are below `ε`.
//!
//! The inner ADMM works on the independent spectral slices only; the rest of
//! the spectrum is the conjugate mirror and is never materialized.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{self, CMatrix, ShiftedHermitianSolver};
use crate::prox::{prox_f1, prox_tnn, ShrinkageThreshold};
use crate::scalar::Real;
use crate::tensor3::{fft_mode3, ifft_mode3, mirror_weight, norm_f1, norm_fro, norm_tnn, tproduct, SpectralTensor3, Tensor3};

/// Ascent step used for the multiplier update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStep {
    /// `G += ρ·(residual)`, the usual augmented-Lagrangian ascent.
    Penalty,
    /// `G += μ·(residual)`, a fixed step equal to the growth factor.
    Growth,
}

/// When the inner consensus ADMM of the C-update stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStop {
    /// Only the primal gap `‖Qᵢ − Ĉᵢ‖` is tested.
    Gap,
    /// The gap and the change of `Ĉᵢ` since the previous inner iteration
    /// must both be small. Without the second test the loop can exit while
    /// `Q` merely tracks `Ĉ`, leaving the subproblem unsolved.
    GapAndStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig<T> {
    /// Weight of the tube-sparsity (F1) term.
    pub alpha: T,
    /// Weight of the tensor nuclear norm.
    pub lambda: T,
    /// Weight of the cross-view consensus term.
    pub beta: T,
    /// Initial penalty.
    pub rho0: T,
    /// Penalty of the inner consensus splitting.
    pub tau: T,
    /// Penalty growth factor.
    pub mu: T,
    pub rho_max: T,
    pub eps: T,
    pub inner_tol: T,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_stop: InnerStop,
    pub seed: u64,
    pub dual_step: DualStep,
    /// Forces the diagonal tubes `C(i,i,:)` to zero through the Y-update.
    pub zero_diagonal: bool,
    /// Records the objective value at every outer iteration.
    pub track_objective: bool,
    /// Solve the per-slice systems with a cached eigendecomposition of the
    /// Gram matrix instead of refactoring them every time.
    pub gram_cache: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.1),
            lambda: T::lit(1e-3),
            beta: T::lit(1.1),
            rho0: T::lit(0.01),
            tau: T::lit(0.01),
            mu: T::lit(1.9),
            rho_max: T::lit(1e6),
            eps: T::lit(1e-6),
            inner_tol: T::lit(1e-6),
            max_outer: 200,
            max_inner: 30,
            inner_stop: InnerStop::GapAndStep,
            seed: 0,
            dual_step: DualStep::Penalty,
            zero_diagonal: false,
            track_objective: true,
            gram_cache: true,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("solver config: {what}")));
        let finite_nonneg = |x: T| x.is_finite() && x >= T::zero();
        if !finite_nonneg(self.alpha) || !finite_nonneg(self.lambda) || !finite_nonneg(self.beta) {
            return bad("alpha, lambda and beta must be finite and nonnegative");
        }
        if !(self.rho0 > T::zero() && self.rho0.is_finite()) {
            return bad("rho0 must be positive");
        }
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.mu > T::one() && self.mu.is_finite()) {
            return bad("mu must exceed 1");
        }
        if !(self.rho_max >= self.rho0 && self.rho_max.is_finite()) {
            return bad("rho_max must be finite and at least rho0");
        }
        if !(self.eps > T::zero()) || !(self.inner_tol > T::zero()) {
            return bad("eps and inner_tol must be positive");
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration caps must be at least 1");
        }
        Ok(())
    }
}

/// Iterates of the outer and inner ADMM.
#[derive(Debug, Clone)]
pub struct SolverState<T: Real> {
    pub c: Tensor3<T>,
    pub y: Tensor3<T>,
    pub z: Tensor3<T>,
    pub g1: Tensor3<T>,
    pub g2: Tensor3<T>,
    /// Inner auxiliaries, one per independent spectral slice.
    pub q: Vec<CMatrix<T>>,
    /// Inner multipliers, one per independent spectral slice.
    pub w: Vec<CMatrix<T>>,
    pub rho: T,
    pub iteration: usize,
}

impl<T: Real> SolverState<T> {
    /// All-zero start for an `n × n × k` representation.
    pub fn zeros(n: usize, k: usize, rho: T) -> Self {
        let half = k / 2 + 1;
        let zero = Tensor3::zeros(n, n, k);
        Self {
            c: zero.clone(),
            y: zero.clone(),
            z: zero.clone(),
            g1: zero.clone(),
            g2: zero,
            q: vec![CMatrix::zeros(n, n); half],
            w: vec![CMatrix::zeros(n, n); half],
            rho,
            iteration: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.c, &self.y, &self.z, &self.g1, &self.g2].iter().all(|t| t.is_finite())
    }
}

/// Per-slice data of `X̂` that stays fixed for a whole solve.
#[derive(Debug, Clone)]
pub struct FourierSystem<T: Real> {
    n: usize,
    k: usize,
    grams: Vec<CMatrix<T>>,
    solvers: Vec<ShiftedHermitianSolver<T>>,
}

impl<T: Real> FourierSystem<T> {
    pub fn new(x: &Tensor3<T>) -> Self {
        let (_, n, k) = x.dims();
        let x_hat = fft_mode3(x);
        let half = x_hat.independent_slices();
        let grams: Vec<CMatrix<T>> = (0..half)
            .into_par_iter()
            .map(|l| {
                let s = x_hat.frontal_slice(l);
                linalg::complex_adjoint_mul(&s, &s)
            })
            .collect();
        let solvers = grams.par_iter().map(ShiftedHermitianSolver::new).collect();
        Self { n, k, grams, solvers }
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_views(&self) -> usize {
        self.k
    }

    /// `X̂⁽ˡ⁾ᴴ X̂⁽ˡ⁾` for independent slice `l`.
    pub fn gram(&self, l: usize) -> &CMatrix<T> {
        &self.grams[l]
    }

    fn solve_slice(&self, l: usize, shift: T, rhs: &CMatrix<T>, cached: bool) -> Result<CMatrix<T>> {
        if cached {
            return Ok(self.solvers[l].solve(shift, rhs));
        }
        let n = self.n;
        let system = &self.grams[l] + CMatrix::identity(n, n) * Complex::new(shift, T::zero());
        let chol = system
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("C-update system is not positive definite".into()))?;
        Ok(chol.solve(rhs))
    }
}

/// Inner-loop diagnostics of one C-update.
#[derive(Debug, Clone, Default)]
pub struct InnerTrace<T> {
    /// `max_i ‖Q_i − Ĉ_i‖_F / max(1, ‖Ĉ_i‖_F)` after each inner iteration.
    pub residuals: Vec<T>,
    /// `max_i ‖Ĉ_i⁺ − Ĉ_i‖_F / max(1, ‖Ĉ_i⁺‖_F)`; empty under [`InnerStop::Gap`].
    pub steps: Vec<T>,
    /// `max_{i,j} ‖Ĉ_i − Ĉ_j‖_F` over all spectral slices after each inner
    /// iteration.
    pub spectral_spread: Vec<T>,
}

impl<T> InnerTrace<T> {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

/// Sum over all `k` spectral slices given only the independent ones.
fn full_spectrum_sum<T: Real>(half: &[CMatrix<T>], k: usize) -> CMatrix<T> {
    let mut total = CMatrix::zeros(half[0].nrows(), half[0].ncols());
    for (l, m) in half.iter().enumerate() {
        if mirror_weight(l, k) == 1 {
            total += m;
        } else {
            total += m.map(|z| Complex::new(z.re + z.re, T::zero()));
        }
    }
    total
}

fn expand_spectrum<T: Real>(half: &[CMatrix<T>], k: usize) -> Vec<CMatrix<T>> {
    (0..k)
        .map(|l| if l < half.len() { half[l].clone() } else { linalg::conj(&half[k - l]) })
        .collect()
}

fn max_pairwise_spread<T: Real>(half: &[CMatrix<T>], k: usize) -> T {
    let full = expand_spectrum(half, k);
    let mut worst = T::zero();
    for i in 0..k {
        for j in (i + 1)..k {
            worst = worst.max(linalg::fro_norm_sq(&(&full[i] - &full[j])).sqrt());
        }
    }
    worst
}

/// `Z = prox_TNN(C − G2/ρ)` with spectral threshold `n3·λ/ρ`.
pub fn update_z<T: Real>(c: &Tensor3<T>, g2: &Tensor3<T>, rho: T, lambda: T) -> Result<Tensor3<T>> {
    let mut arg = c.clone();
    arg.axpy(-T::one() / rho, g2);
    let n3 = T::from_count(c.dims().2);
    prox_tnn(&arg, ShrinkageThreshold::new(n3 * lambda / rho)?)
}

/// `Y = prox_F1(C − G1/ρ)` with threshold `α/ρ`.
pub fn update_y<T: Real>(c: &Tensor3<T>, g1: &Tensor3<T>, rho: T, alpha: T) -> Result<Tensor3<T>> {
    let mut arg = c.clone();
    arg.axpy(-T::one() / rho, g1);
    Ok(prox_f1(&arg, ShrinkageThreshold::new(alpha / rho)?))
}

fn zero_diagonal_tubes<T: Real>(t: &mut Tensor3<T>) {
    let (n1, n2, n3) = t.dims();
    for i in 0..n1.min(n2) {
        for l in 0..n3 {
            t[(i, i, l)] = T::zero();
        }
    }
}

/// C-update: inner ADMM over the spectral slices with auxiliaries `Q_i` and
/// multipliers `W_i`. Each iteration
///
/// * solves `[(β(k−1) + τ + 2ρ)I + X̂ᵢᴴX̂ᵢ] Ĉᵢ = β Σ_{j≠i} Q_j + τQᵢ + Wᵢ + X̂ᵢᴴX̂ᵢ + ρ(P̂1ᵢ + P̂2ᵢ)`
///   with `P1 = Y + G1/ρ`, `P2 = Z + G2/ρ`,
/// * sets `Qᵢ = [β Σ_{j≠i} Ĉ_j + τĈᵢ − Wᵢ] / (β(k−1) + τ)`,
/// * updates `Wᵢ += τ(Qᵢ − Ĉᵢ)`,
///
/// until the relative `Q − Ĉ` gap (and, under [`InnerStop::GapAndStep`],
/// the relative change of `Ĉ`) drops below `inner_tol` or `max_inner`
/// iterations have run. `state.c`, `state.q` and `state.w` are overwritten.
pub fn update_c<T: Real>(system: &FourierSystem<T>, state: &mut SolverState<T>, cfg: &SolverConfig<T>) -> Result<InnerTrace<T>> {
    let (n, _, k) = state.c.dims();
    if n != system.n || k != system.k {
        return Err(dim_mismatch("update_c", format!("state {:?} vs system n={}, k={}", state.c.dims(), system.n, system.k)));
    }
    let rho = state.rho;
    let inv_rho = T::one() / rho;
    let mut p_sum = &state.y + &state.z;
    p_sum.axpy(inv_rho, &state.g1);
    p_sum.axpy(inv_rho, &state.g2);
    let p_hat = fft_mode3(&p_sum);
    let half = p_hat.independent_slices();
    let rho_c = Complex::new(rho, T::zero());
    let constant: Vec<CMatrix<T>> = (0..half).map(|l| system.gram(l) + p_hat.frontal_slice(l) * rho_c).collect();

    let beta = cfg.beta;
    let tau = cfg.tau;
    let coupling = beta * T::from_count(k - 1);
    let shift = coupling + tau + rho + rho;
    let q_denominator = coupling + tau;
    let beta_c = Complex::new(beta, T::zero());
    let tau_c = Complex::new(tau, T::zero());

    let check_step = cfg.inner_stop == InnerStop::GapAndStep;
    let mut c_hat: Vec<CMatrix<T>> = if check_step {
        let prev = fft_mode3(&state.c);
        (0..half).map(|l| prev.frontal_slice(l)).collect()
    } else {
        Vec::new()
    };
    let mut trace = InnerTrace { residuals: Vec::new(), steps: Vec::new(), spectral_spread: Vec::new() };
    for _ in 0..cfg.max_inner {
        let q_total = full_spectrum_sum(&state.q, k);
        let next: Vec<CMatrix<T>> = (0..half)
            .into_par_iter()
            .map(|l| {
                let others = &q_total - &state.q[l];
                let rhs = others * beta_c + &state.q[l] * tau_c + &state.w[l] + &constant[l];
                system.solve_slice(l, shift, &rhs, cfg.gram_cache)
            })
            .collect::<Result<_>>()?;
        let mut step = T::zero();
        if check_step {
            for (new, old) in next.iter().zip(&c_hat) {
                let scale = linalg::fro_norm_sq(new).sqrt().max(T::one());
                step = step.max(linalg::fro_norm_sq(&(new - old)).sqrt() / scale);
            }
        }
        c_hat = next;
        let c_total = full_spectrum_sum(&c_hat, k);
        let inv_den = Complex::new(T::one() / q_denominator, T::zero());
        let mut residual = T::zero();
        for l in 0..half {
            let others = &c_total - &c_hat[l];
            let q = (others * beta_c + &c_hat[l] * tau_c - &state.w[l]) * inv_den;
            let gap = &q - &c_hat[l];
            state.w[l] += &gap * tau_c;
            let scale = linalg::fro_norm_sq(&c_hat[l]).sqrt().max(T::one());
            residual = residual.max(linalg::fro_norm_sq(&gap).sqrt() / scale);
            state.q[l] = q;
        }
        trace.residuals.push(residual);
        if check_step {
            trace.steps.push(step);
        }
        trace.spectral_spread.push(max_pairwise_spread(&c_hat, k));
        if residual <= cfg.inner_tol && step <= cfg.inner_tol {
            break;
        }
    }
    let mut spectral = SpectralTensor3::zeros(n, n, k);
    for (l, m) in c_hat.iter().enumerate() {
        spectral.set_frontal_slice(l, m);
    }
    spectral.fill_conjugate_mirror();
    state.c = ifft_mode3(&spectral)?;
    Ok(trace)
}

/// Multiplier ascent and penalty growth.
pub fn update_duals<T: Real>(state: &mut SolverState<T>, cfg: &SolverConfig<T>) {
    let step = match cfg.dual_step {
        DualStep::Penalty => state.rho,
        DualStep::Growth => cfg.mu,
    };
    let y_gap = &state.y - &state.c;
    let z_gap = &state.z - &state.c;
    state.g1.axpy(step, &y_gap);
    state.g2.axpy(step, &z_gap);
    state.rho = (cfg.mu * state.rho).min(cfg.rho_max);
}

/// Borrowed `(C, Y, Z)` triple used by the stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a, T> {
    pub c: &'a Tensor3<T>,
    pub y: &'a Tensor3<T>,
    pub z: &'a Tensor3<T>,
}

/// The five stopping-rule residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residuals<T> {
    /// `‖Z − C‖_F / ‖X‖_F`
    pub z_c: T,
    /// `‖Y − C‖_F / ‖X‖_F`
    pub y_c: T,
    /// `‖Z⁺ − Z‖_F / ‖Z‖_F`
    pub dz: T,
    /// `‖Y⁺ − Y‖_F / ‖Y‖_F`
    pub dy: T,
    /// `‖C⁺ − C‖_F / ‖C‖_F`
    pub dc: T,
}

impl<T: Real> Residuals<T> {
    pub fn max(&self) -> T {
        self.as_array().into_iter().fold(T::zero(), |m, r| m.max(r))
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.z_c, self.y_c, self.dz, self.dy, self.dc]
    }
}

/// Ratio with the zero-denominator convention `0/0 = 0`, `a/0 = 1`: a change
/// away from an all-zero iterate counts as a full relative change.
fn relative<T: Real>(num: T, den: T) -> T {
    if den == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::one()
        }
    } else {
        num / den
    }
}

/// Evaluates the stopping rule between two consecutive iterates.
pub fn check_convergence<T: Real>(prev: Iterate<'_, T>, curr: Iterate<'_, T>, x_norm: T, eps: T) -> (bool, Residuals<T>) {
    let res = Residuals {
        z_c: relative(norm_fro(&(curr.z - curr.c)), x_norm),
        y_c: relative(norm_fro(&(curr.y - curr.c)), x_norm),
        dz: relative(norm_fro(&(curr.z - prev.z)), norm_fro(prev.z)),
        dy: relative(norm_fro(&(curr.y - prev.y)), norm_fro(prev.y)),
        dc: relative(norm_fro(&(curr.c - prev.c)), norm_fro(prev.c)),
    };
    (res.max() <= eps, res)
}

/// `Σ_{i≠j} ‖C(:,:,i) − C(:,:,j)‖_F²` over ordered pairs.
pub fn consensus_penalty<T: Real>(c: &Tensor3<T>) -> T {
    let (n1, n2, k) = c.dims();
    let mut sum = DMatrix::<T>::zeros(n1, n2);
    let mut sq = T::zero();
    for l in 0..k {
        let s = c.frontal_slice_view(l);
        sq += s.norm_squared();
        sum += s;
    }
    let value = T::lit(2.0) * T::from_count(k) * sq - T::lit(2.0) * sum.norm_squared();
    value.max(T::zero())
}

/// `max_{i≠j} ‖C(:,:,i) − C(:,:,j)‖_F`
pub fn max_slice_disagreement<T: Real>(c: &Tensor3<T>) -> T {
    let k = c.dims().2;
    let mut worst = T::zero();
    for i in 0..k {
        for j in (i + 1)..k {
            worst = worst.max((c.frontal_slice_view(i) - c.frontal_slice_view(j)).norm());
        }
    }
    worst
}

/// `α‖C‖_F1 + λ‖C‖_TNN + ½‖X − X*C‖_F² + (β/2) Σ_{i≠j} ‖Cᵢ − Cⱼ‖_F²`
pub fn objective<T: Real>(x: &Tensor3<T>, c: &Tensor3<T>, cfg: &SolverConfig<T>) -> Result<T> {
    let (_, n, k) = x.dims();
    if c.dims() != (n, n, k) {
        return Err(dim_mismatch("objective", format!("X {:?}, C {:?}", x.dims(), c.dims())));
    }
    let half = T::lit(0.5);
    let fit = (x - &tproduct(x, c)?).fro_norm_sq();
    Ok(cfg.alpha * norm_f1(c) + cfg.lambda * norm_tnn(c)? + half * fit + half * cfg.beta * consensus_penalty(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Converged,
    NotConverged,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "CONVERGED",
            Self::NotConverged => "NOT_CONVERGED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub objective: Option<T>,
    pub residuals: Residuals<T>,
    /// Penalty after this iteration's update.
    pub rho: T,
    pub inner_iterations: usize,
    pub inner_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub status: SolveStatus,
}

impl<T: Real> SolverTrace<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_residuals(&self) -> Option<Residuals<T>> {
        self.records.last().map(|r| r.residuals)
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput<T: Real> {
    pub c: Tensor3<T>,
    pub trace: SolverTrace<T>,
    pub state: SolverState<T>,
}

/// Runs the outer ADMM from the all-zero start.
///
/// Reaching `max_outer` is reported through [`SolveStatus::NotConverged`],
/// not as an error.
pub fn solve<T: Real>(x: &Tensor3<T>, cfg: &SolverConfig<T>) -> Result<SolveOutput<T>> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("solve input"));
    }
    let x_norm = norm_fro(x);
    if x_norm == T::zero() {
        return Err(Error::InvalidArgument("input tensor is zero".into()));
    }
    let (_, n, k) = x.dims();
    let system = FourierSystem::new(x);
    let mut state = SolverState::zeros(n, k, cfg.rho0);
    let mut records = Vec::new();
    let mut status = SolveStatus::NotConverged;

    for t in 0..cfg.max_outer {
        let prev_c = state.c.clone();
        let prev_y = state.y.clone();
        let prev_z = state.z.clone();

        state.z = update_z(&state.c, &state.g2, state.rho, cfg.lambda)?;
        state.y = update_y(&state.c, &state.g1, state.rho, cfg.alpha)?;
        if cfg.zero_diagonal {
            zero_diagonal_tubes(&mut state.y);
        }
        let inner = update_c(&system, &mut state, cfg)?;
        update_duals(&mut state, cfg);
        state.iteration = t + 1;
        if !state.is_finite() {
            return Err(Error::NonFinite("solver iterate"));
        }

        let (converged, residuals) = check_convergence(
            Iterate { c: &prev_c, y: &prev_y, z: &prev_z },
            Iterate { c: &state.c, y: &state.y, z: &state.z },
            x_norm,
            cfg.eps,
        );
        let objective = if cfg.track_objective { Some(objective(x, &state.c, cfg)?) } else { None };
        records.push(IterationRecord {
            iteration: t + 1,
            objective,
            residuals,
            rho: state.rho,
            inner_iterations: inner.iterations(),
            inner_residual: inner.residuals.last().copied().unwrap_or(T::zero()),
        });
        if converged {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(SolveOutput {
        c: state.c.clone(),
        trace: SolverTrace { records, status },
        state,
    })
}
