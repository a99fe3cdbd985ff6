//! Concurrent-learning parameter estimator.
//!
//! The estimate evolves by
//! `θ̂' = k_θ · Γ · Σᵢ Ĝᵢ(Pᵢ - F̂ᵢ - Ĝᵢᵀθ̂)`
//! against the main history stack, while the least-squares gain follows the
//! Riccati-type law `Γ' = β₁Γ - k_θ·Γ·𝒢·Γ`. The equilibrium of the update
//! law is the batch least-squares solution over the stack, which is exposed
//! separately as an oracle.

use crate::history::HistoryStack;
use crate::numerics::{solve_spd, sym_eigenvalues, Mat, NumError};
use core::fmt;

/// Slack on the positive-definiteness check of Γ, relative to its norm.
const PD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorError {
    Dimension(NumError),
    /// Γ lost positive definiteness beyond slack; the run cannot continue.
    GainDivergence { min_eigenvalue: f64 },
    /// Batch least squares requires a full-rank stack.
    RankDeficientStack,
}

impl fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorError::Dimension(e) => write!(f, "{e}"),
            EstimatorError::GainDivergence { min_eigenvalue } => write!(
                f,
                "least-squares gain lost positive definiteness (min eigenvalue {min_eigenvalue:e})"
            ),
            EstimatorError::RankDeficientStack => {
                write!(f, "history stack is rank deficient")
            }
        }
    }
}

impl core::error::Error for EstimatorError {}

impl From<NumError> for EstimatorError {
    fn from(e: NumError) -> Self {
        EstimatorError::Dimension(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorGains {
    /// Adaptation gain k_θ > 0.
    pub k_theta: f64,
    /// Forgetting rate β₁ ≥ 0.
    pub beta1: f64,
    /// Monitor floor Γ̲ for the gain-bound check (not enforced).
    pub gamma_min: f64,
    /// Monitor ceiling Γ̄ for the gain-bound check (not enforced).
    pub gamma_max: f64,
}

impl EstimatorGains {
    pub fn new(k_theta: f64, beta1: f64) -> Self {
        assert!(k_theta > 0.0 && beta1 >= 0.0);
        Self {
            k_theta,
            beta1,
            gamma_min: 0.0,
            gamma_max: f64::INFINITY,
        }
    }

    pub fn with_monitor_bounds(mut self, gamma_min: f64, gamma_max: f64) -> Self {
        assert!(gamma_min <= gamma_max);
        self.gamma_min = gamma_min;
        self.gamma_max = gamma_max;
        self
    }
}

/// Parameter estimate θ̂ (one column for a parameter vector) and
/// least-squares gain Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub theta_hat: Mat,
    pub gamma: Mat,
}

impl EstimatorState {
    /// θ̂ = 0, Γ = gamma0_scale·I.
    pub fn new(param_dim: usize, gamma0_scale: f64) -> Self {
        assert!(gamma0_scale > 0.0);
        Self {
            theta_hat: Mat::zeros(param_dim, 1),
            gamma: Mat::identity(param_dim).scale(gamma0_scale),
        }
    }

    pub fn param_dim(&self) -> usize {
        self.theta_hat.rows()
    }
}

/// Extremes of the Γ spectrum plus the bound-monitor outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub gamma_eig_min: f64,
    pub gamma_eig_max: f64,
    /// True when Γ escaped the configured `[Γ̲, Γ̄]` band. Recorded, never
    /// enforced.
    pub gamma_bound_violated: bool,
}

/// Right-hand side of the θ̂ update law.
pub fn theta_dot(
    state: &EstimatorState,
    stack: &HistoryStack,
    gains: &EstimatorGains,
) -> Result<Mat, EstimatorError> {
    let p_dim = state.param_dim();
    let cols = state.theta_hat.cols();
    let mut accum = Mat::zeros(p_dim, cols);
    let theta_col = state.theta_hat.col(0);
    for dp in stack.points() {
        if dp.g_hat.rows() != p_dim {
            return Err(EstimatorError::Dimension(NumError::ShapeMismatch {
                rows: p_dim,
                cols,
                other_rows: dp.g_hat.rows(),
                other_cols: dp.g_hat.cols(),
            }));
        }
        // resid = P − F̂ − Ĝᵀθ̂, length n.
        let mut resid = dp.p.clone();
        resid.axpy(-1.0, &dp.f_hat)?;
        let predicted = dp.g_hat.tr_matvec(&theta_col)?;
        resid.axpy(-1.0, &predicted)?;
        // accum += Ĝ · resid.
        for i in 0..p_dim {
            let mut acc = 0.0;
            for j in 0..resid.dim() {
                acc += dp.g_hat[(i, j)] * resid[j];
            }
            accum[(i, 0)] += acc;
        }
    }
    Ok(state.gamma.matmul(&accum)?.scale(gains.k_theta))
}

/// Right-hand side of the Γ update law `Γ' = β₁Γ - k_θ·Γ·𝒢·Γ`.
pub fn gamma_dot(
    state: &EstimatorState,
    stack: &HistoryStack,
    gains: &EstimatorGains,
) -> Result<Mat, EstimatorError> {
    let ggg = state
        .gamma
        .matmul(stack.gram())?
        .matmul(&state.gamma)?;
    let mut out = state.gamma.scale(gains.beta1);
    out.axpy(-gains.k_theta, &ggg)?;
    Ok(out)
}

/// One forward-Euler step of θ̂ and Γ. Γ is re-symmetrized after the update
/// and its spectrum is checked: losing positive definiteness is fatal,
/// leaving the configured monitor band is only reported.
pub fn estimator_step(
    state: &mut EstimatorState,
    stack: &HistoryStack,
    gains: &EstimatorGains,
    dt: f64,
) -> Result<StepReport, EstimatorError> {
    if dt != 0.0 {
        let td = theta_dot(state, stack, gains)?;
        let gd = gamma_dot(state, stack, gains)?;
        state.theta_hat.axpy(dt, &td)?;
        state.gamma.axpy(dt, &gd)?;
        state.gamma = state.gamma.symmetrized()?;
    }
    let evs = sym_eigenvalues(&state.gamma)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &ev in evs.as_slice() {
        lo = lo.min(ev);
        hi = hi.max(ev);
    }
    if lo <= PD_SLACK * state.gamma.frob_norm().max(1.0) * -1.0 || !lo.is_finite() {
        return Err(EstimatorError::GainDivergence { min_eigenvalue: lo });
    }
    let violated = lo < gains.gamma_min - 1e-12 || hi > gains.gamma_max;
    Ok(StepReport {
        gamma_eig_min: lo,
        gamma_eig_max: hi,
        gamma_bound_violated: violated,
    })
}

/// Batch least-squares oracle: the normal-equations solution
/// `𝒢⁻¹ Σᵢ Ĝᵢ(Pᵢ - F̂ᵢ)` minimizing `Σᵢ ‖Pᵢ - F̂ᵢ - Ĝᵢᵀθ‖²`.
pub fn batch_least_squares(stack: &HistoryStack) -> Result<Mat, EstimatorError> {
    let p_dim = stack.param_dim();
    let mut rhs = Mat::zeros(p_dim, 1);
    for dp in stack.points() {
        let mut diff = dp.p.clone();
        diff.axpy(-1.0, &dp.f_hat)?;
        let contrib = dp.g_hat.matvec(&diff)?;
        for i in 0..p_dim {
            rhs[(i, 0)] += contrib[i];
        }
    }
    solve_spd(stack.gram(), &rhs).map_err(|e| match e {
        NumError::Singular => EstimatorError::RankDeficientStack,
        other => EstimatorError::Dimension(other),
    })
}

/// Residual sum `Σᵢ ‖Pᵢ - F̂ᵢ - Ĝᵢᵀθ‖²` for a given θ (diagnostic).
pub fn stack_residual(stack: &HistoryStack, theta: &Mat) -> Result<f64, EstimatorError> {
    let theta_col = theta.col(0);
    let mut total = 0.0;
    for dp in stack.points() {
        let mut resid = dp.p.clone();
        resid.axpy(-1.0, &dp.f_hat)?;
        resid.axpy(-1.0, &dp.g_hat.tr_matvec(&theta_col)?)?;
        let n = resid.norm();
        total += n * n;
    }
    Ok(total)
}
