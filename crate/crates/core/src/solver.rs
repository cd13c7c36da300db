//! Group-sparse robust self-representation via linearized ADMM.
//!
//! Solves, for modalities `t = 1..T`,
//!
//! ```text
//! min  ||Ω||_{1,2} + ρ Σ_t ||W(t)||_1 + λ Σ_t ||E(t)||_1
//! s.t. X(t) = L(t) + E(t),  L(t) = L(t) W(t),  diag W(t) = 0
//! ```
//!
//! where `||Ω||_{1,2}` sums, over every position `(k, j)`, the Euclidean norm
//! of `w_kj(.)` across modalities. One iteration runs, per modality:
//!
//! 1. `L = X - E`
//! 2. `G = L (I - W) - Y / μ`
//! 3. `W⁺ = group_shrink(W + Lᵀ G / η₁, 1 / (μ η₁))`
//! 4. `W = shrink(W⁺, ρ / (μ η₁))`, then zero the diagonal
//! 5. `E = shrink(E + G (I - W)ᵀ / η₂, λ / (μ η₂))`
//! 6. `Y = Y + μ (L W - L)`
//! 7. `μ = ε μ`
//!
//! With a single modality the group term is `||W||_1` and the iteration is
//! the unimodal bi-sparse recovery. The noiseless variant keeps `E = 0`.

use crate::error::{Error, Result};
use crate::linalg::{group_norm, group_shrink, shrink, spectral_norm, Matrix, MatrixStack, ModalityStack};

fn default_lambda(rows: usize) -> f64 {
    6.0 / (rows as f64).sqrt()
}

/// Margin applied to the squared spectral norms when step constants are automatic.
pub const AUTO_ETA_MARGIN: f64 = 1.02;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepConstant {
    /// Recomputed every iteration from the current iterate.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the per-modality l1 term.
    pub rho: f64,
    /// Weight of the sparse error term; `None` means `6 / sqrt(max_t m(t))`.
    pub lambda: Option<f64>,
    pub mu0: f64,
    /// Penalty growth factor applied after every iteration.
    pub growth: f64,
    pub eta_w: StepConstant,
    pub eta_e: StepConstant,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_change: f64,
    /// Scale data columns to unit length before solving.
    pub normalize_columns: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.1,
            lambda: None,
            mu0: 0.1,
            growth: 1.1,
            eta_w: StepConstant::Auto,
            eta_e: StepConstant::Auto,
            max_iters: 500,
            tol_residual: 1e-6,
            tol_change: 1e-4,
            normalize_columns: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid("rho", format!("must be nonnegative, got {}", self.rho)));
        }
        if let Some(lambda) = self.lambda {
            positive("lambda", lambda)?;
        }
        positive("mu0", self.mu0)?;
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::invalid("growth", format!("must exceed 1, got {}", self.growth)));
        }
        if let StepConstant::Fixed(v) = self.eta_w {
            positive("eta_w", v)?;
        }
        if let StepConstant::Fixed(v) = self.eta_e {
            positive("eta_e", v)?;
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        positive("tol_residual", self.tol_residual)?;
        positive("tol_change", self.tol_change)?;
        Ok(())
    }

    /// Error weight actually used for `data`.
    pub fn lambda_for(&self, data: &ModalityStack) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(data.max_rows()))
    }
}

/// Diagnostics recorded after each iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// Penalty used during this iteration.
    pub mu: f64,
    pub eta_w: f64,
    pub eta_e: Vec<f64>,
    /// Squared spectral norms the step constants must dominate (`||L(t)||²`, `||I - W(t)||²`).
    pub lipschitz_w: Vec<f64>,
    pub lipschitz_e: Vec<f64>,
    /// `||L W - L||_F / max(1, ||L||_F)` per modality.
    pub residuals: Vec<f64>,
    /// Relative Frobenius change of the stacked coefficients.
    pub w_change: f64,
    pub objective: f64,
}

/// Iterates of the solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub w: MatrixStack,
    pub e: MatrixStack,
    pub l: MatrixStack,
    pub y: MatrixStack,
    pub mu: f64,
    pub iter: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Robust,
    Clean,
}

impl SolverState {
    /// Cold start: `W = 0`, `E = 0`, `Y = 0`, `L = X`, `μ = μ₀`.
    pub fn initial(data: &ModalityStack, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        check_data(data)?;
        let n = data.n();
        let zeros_like = |f: &dyn Fn(&Matrix) -> Matrix| MatrixStack::new(data.iter().map(f).collect());
        Ok(SolverState {
            w: zeros_like(&|_| Matrix::zeros(n, n))?,
            e: zeros_like(&|x| Matrix::zeros(x.rows(), n))?,
            l: data.clone(),
            y: zeros_like(&|x| Matrix::zeros(x.rows(), n))?,
            mu: cfg.mu0,
            iter: 0,
            history: Vec::new(),
        })
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.l
            .iter()
            .zip(self.w.iter())
            .map(|(l, w)| relative_residual(l, w))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// Iterates stopped being finite; the state of the last finite iteration is returned.
    Diverged {
        iter: usize,
    },
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub w: MatrixStack,
    pub e: MatrixStack,
    pub l: MatrixStack,
    pub converged: bool,
    pub status: Status,
    pub iters_used: usize,
    pub final_residuals: Vec<f64>,
    pub objective: f64,
    pub lambda: f64,
    pub final_mu: f64,
    pub history: Vec<IterationRecord>,
}

fn check_data(data: &ModalityStack) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::invalid(
            "data",
            format!("need at least 2 observations, got {}", data.n()),
        ));
    }
    Ok(())
}

/// `||L W - L||_F / max(1, ||L||_F)`.
pub fn relative_residual(l: &Matrix, w: &Matrix) -> f64 {
    let lw = l.matmul(w).expect("n x n coefficients");
    let r = lw.sub(l).expect("same shape").frobenius_norm();
    r / l.frobenius_norm().max(1.0)
}

/// `||Ω||_{1,2} + ρ Σ ||W(t)||_1 + λ Σ ||E(t)||_1`.
pub fn objective_value(w: &MatrixStack, e: &MatrixStack, rho: f64, lambda: f64) -> f64 {
    group_norm(w)
        + rho * w.iter().map(Matrix::l1_norm).sum::<f64>()
        + lambda * e.iter().map(Matrix::l1_norm).sum::<f64>()
}

/// Objective of the robust program at `state`.
pub fn objective(state: &SolverState, cfg: &SolverConfig) -> f64 {
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(state.e.max_rows()));
    objective_value(&state.w, &state.e, cfg.rho, lambda)
}

fn identity_minus(w: &Matrix) -> Matrix {
    let mut out = w.scale(-1.0);
    for i in 0..w.rows() {
        out[(i, i)] += 1.0;
    }
    out
}

fn advance(
    state: &SolverState,
    data: &ModalityStack,
    cfg: &SolverConfig,
    lambda: f64,
    mode: Mode,
) -> Result<SolverState> {
    if state.w.len() != data.len() || state.w.n() != data.n() {
        return Err(Error::shape(
            "solver state",
            format!("{} modalities x {} observations", data.len(), data.n()),
            format!("{} x {}", state.w.len(), state.w.n()),
        ));
    }
    if let Some((t, _)) = state
        .w
        .iter()
        .enumerate()
        .find(|(_, w)| w.diagonal().iter().any(|&d| d != 0.0))
    {
        return Err(Error::invalid("state", format!("W({t}) has a nonzero diagonal")));
    }
    let mu = state.mu;
    let layers = data.len();

    let l: Vec<Matrix> = match mode {
        Mode::Robust => data
            .iter()
            .zip(state.e.iter())
            .map(|(x, e)| x.sub(e))
            .collect::<Result<_>>()?,
        Mode::Clean => data.layers().to_vec(),
    };
    let w_hat_prev: Vec<Matrix> = state.w.iter().map(identity_minus).collect();
    let g: Vec<Matrix> = (0..layers)
        .map(|t| l[t].matmul(&w_hat_prev[t])?.sub(&state.y[t].scale(1.0 / mu)))
        .collect::<Result<_>>()?;

    // The group prox couples modalities, so the W step shares one constant.
    let lipschitz_w: Vec<f64> = l.iter().map(|m| spectral_norm(m).powi(2)).collect();
    let eta_w = match cfg.eta_w {
        StepConstant::Auto => AUTO_ETA_MARGIN * lipschitz_w.iter().fold(0.0f64, |a, &b| a.max(b)),
        StepConstant::Fixed(v) => v,
    };
    if !(eta_w > 0.0 && eta_w.is_finite()) {
        return Err(Error::invalid("eta_w", format!("degenerate step constant {eta_w}")));
    }

    let step: Vec<Matrix> = (0..layers)
        .map(|t| {
            let mut a = state.w[t].clone();
            a.axpy(1.0 / eta_w, &l[t].t_matmul(&g[t])?);
            Ok(a)
        })
        .collect::<Result<_>>()?;
    let w_plus = group_shrink(&MatrixStack::new(step)?, 1.0 / (mu * eta_w))?;
    let w_next: Vec<Matrix> = w_plus
        .iter()
        .map(|wp| {
            let mut w = shrink(wp, cfg.rho / (mu * eta_w))?;
            w.set_diagonal(0.0);
            Ok(w)
        })
        .collect::<Result<_>>()?;
    let w_hat_next: Vec<Matrix> = w_next.iter().map(identity_minus).collect();

    let mut lipschitz_e = Vec::new();
    let mut eta_e = Vec::new();
    let e_next: Vec<Matrix> = match mode {
        Mode::Robust => (0..layers)
            .map(|t| {
                let lip = spectral_norm(&w_hat_next[t]).powi(2);
                let eta = match cfg.eta_e {
                    StepConstant::Auto => AUTO_ETA_MARGIN * lip,
                    StepConstant::Fixed(v) => v,
                };
                lipschitz_e.push(lip);
                eta_e.push(eta);
                let mut a = state.e[t].clone();
                a.axpy(1.0 / eta, &g[t].matmul_t(&w_hat_next[t])?);
                shrink(&a, lambda / (mu * eta))
            })
            .collect::<Result<_>>()?,
        Mode::Clean => state.e.layers().to_vec(),
    };

    let y_next: Vec<Matrix> = (0..layers)
        .map(|t| {
            let mut y = state.y[t].clone();
            y.axpy(mu, &l[t].matmul(&w_next[t])?.sub(&l[t])?);
            Ok(y)
        })
        .collect::<Result<_>>()?;

    let l_next: Vec<Matrix> = match mode {
        Mode::Robust => data.iter().zip(&e_next).map(|(x, e)| x.sub(e)).collect::<Result<_>>()?,
        Mode::Clean => l,
    };

    let finite = w_next.iter().chain(&e_next).chain(&y_next).all(Matrix::is_finite) && (mu * cfg.growth).is_finite();
    if !finite {
        return Err(Error::Diverged { iter: state.iter + 1 });
    }

    let mut dw_sq = 0.0;
    let mut w_sq = 0.0;
    for (new, old) in w_next.iter().zip(state.w.iter()) {
        dw_sq += new.sub(old)?.frobenius_norm().powi(2);
        w_sq += old.frobenius_norm().powi(2);
    }
    let w_change = dw_sq.sqrt() / w_sq.sqrt().max(1.0);

    let w = MatrixStack::new(w_next)?;
    let e = MatrixStack::new(e_next)?;
    let l = MatrixStack::new(l_next)?;
    let residuals: Vec<f64> = l.iter().zip(w.iter()).map(|(l, w)| relative_residual(l, w)).collect();
    let objective = objective_value(&w, &e, cfg.rho, lambda);

    let mut history = state.history.clone();
    history.push(IterationRecord {
        iter: state.iter + 1,
        mu,
        eta_w,
        eta_e,
        lipschitz_w,
        lipschitz_e,
        residuals,
        w_change,
        objective,
    });
    Ok(SolverState {
        w,
        e,
        l,
        y: MatrixStack::new(y_next)?,
        mu: mu * cfg.growth,
        iter: state.iter + 1,
        history,
    })
}

/// One pass of the robust iteration.
///
/// `data` is used as given; column normalization is the caller's business
/// here (see [`SolverConfig::normalize_columns`] for the `fit_*` entry points).
pub fn iterate_once(state: SolverState, data: &ModalityStack, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    advance(&state, data, cfg, cfg.lambda_for(data), Mode::Robust)
}

fn converged(record: &IterationRecord, cfg: &SolverConfig) -> bool {
    record.residuals.iter().all(|&r| r <= cfg.tol_residual) && record.w_change <= cfg.tol_change
}

fn run(data: &ModalityStack, cfg: &SolverConfig, mode: Mode) -> Result<SolverResult> {
    cfg.validate()?;
    check_data(data)?;
    let data = if cfg.normalize_columns {
        data.normalize_columns()
    } else {
        data.clone()
    };
    let lambda = cfg.lambda_for(&data);
    let mut state = SolverState::initial(&data, cfg)?;
    let mut status = Status::MaxIterations;
    while state.iter < cfg.max_iters {
        match advance(&state, &data, cfg, lambda, mode) {
            Ok(next) => state = next,
            Err(Error::Diverged { iter }) => {
                log::warn!("solver diverged at iteration {iter} (mu = {:e})", state.mu);
                status = Status::Diverged { iter };
                break;
            }
            Err(other) => return Err(other),
        }
        if converged(state.history.last().expect("just pushed"), cfg) {
            status = Status::Converged;
            break;
        }
    }
    let final_residuals = state.residuals();
    let objective = objective_value(&state.w, &state.e, cfg.rho, lambda);
    Ok(SolverResult {
        converged: status == Status::Converged,
        status,
        iters_used: state.iter,
        final_residuals,
        objective,
        lambda,
        final_mu: state.mu,
        history: state.history,
        w: state.w,
        e: state.e,
        l: state.l,
    })
}

/// Robust joint fit over all modalities.
pub fn fit_rogsure(data: &ModalityStack, cfg: &SolverConfig) -> Result<SolverResult> {
    run(data, cfg, Mode::Robust)
}

/// Noiseless joint fit: `E` stays zero and `L(t) = X(t)` throughout. `ρ = 0` is allowed.
pub fn fit_clean(data: &ModalityStack, cfg: &SolverConfig) -> Result<SolverResult> {
    run(data, cfg, Mode::Clean)
}

/// Independent single-modality fits, one per layer (the unimodal path fused by summation).
pub fn fit_each_modality(data: &ModalityStack, cfg: &SolverConfig) -> Result<Vec<SolverResult>> {
    data.iter()
        .map(|x| fit_rogsure(&MatrixStack::new(vec![x.clone()])?, cfg))
        .collect()
}
