//! Output-feedback velocity estimator.
//!
//! The estimator integrates `p̂' = q̂`, `q̂' = f0(x̂, u) + θ̂ᵀσ(x̂, u) + ν` with
//! the feedback `ν = α²p̃ - (k+α+β)η`. The filter signal η substitutes for the
//! unmeasurable velocity error; it is realized in integral form so only the
//! measured position error p̃ = p - p̂ is ever consumed.

use crate::numerics::{Mat, NumError, VecN};
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ObserverError {
    /// Gains must be strictly positive.
    BadGains,
    Dimension(NumError),
}

impl fmt::Display for ObserverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObserverError::BadGains => write!(f, "observer gains must be strictly positive"),
            ObserverError::Dimension(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ObserverError {}

impl From<NumError> for ObserverError {
    fn from(e: NumError) -> Self {
        ObserverError::Dimension(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverGains {
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
}

impl ObserverGains {
    pub fn new(alpha: f64, k: f64, beta: f64) -> Result<Self, ObserverError> {
        if alpha > 0.0 && k > 0.0 && beta > 0.0 {
            Ok(Self { alpha, k, beta })
        } else {
            Err(ObserverError::BadGains)
        }
    }
}

/// Observer state. `eta_integral` is the running value of the integral term
/// in the η filter; η itself starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub p_hat: VecN,
    pub q_hat: VecN,
    pub eta: VecN,
    eta_integral: VecN,
}

impl ObserverState {
    pub fn new(p_hat: VecN, q_hat: VecN) -> Self {
        let dim = p_hat.dim();
        assert_eq!(dim, q_hat.dim());
        Self {
            p_hat,
            q_hat,
            eta: VecN::zeros(dim),
            eta_integral: VecN::zeros(dim),
        }
    }

    /// Initialize from the first measurement so p̃(T₀) = 0, under which the
    /// integral-form filter exactly matches its differential form. The
    /// velocity estimate starts at zero.
    pub fn from_first_measurement(p_measured: &VecN) -> Self {
        Self::new(p_measured.clone(), VecN::zeros(p_measured.dim()))
    }
}

/// Feedback term `ν = α²·p̃ - (k+α+β)·η`.
pub fn feedback_nu(
    p_tilde: &VecN,
    eta: &VecN,
    gains: &ObserverGains,
) -> Result<VecN, ObserverError> {
    let mut nu = p_tilde.scale(gains.alpha * gains.alpha);
    nu.axpy(-(gains.k + gains.alpha + gains.beta), eta)?;
    Ok(nu)
}

/// Advance the η filter one step and return the new η.
///
/// The filter is the integral form
/// `η(t) = -∫(β+k)η - ∫kα p̃ - (k+α)p̃(t)`;
/// the integral state is accumulated by forward Euler using left endpoints,
/// so the very first call returns `-(k+α)·p̃` with the integral still zero.
pub fn eta_update(
    state: &mut ObserverState,
    p_tilde: &VecN,
    gains: &ObserverGains,
    dt: f64,
) -> Result<VecN, ObserverError> {
    let mut eta = state.eta_integral.scale(-1.0);
    eta.axpy(-(gains.k + gains.alpha), p_tilde)?;
    state.eta_integral.axpy(dt * (gains.beta + gains.k), &eta)?;
    state
        .eta_integral
        .axpy(dt * gains.k * gains.alpha, p_tilde)?;
    state.eta = eta.clone();
    Ok(eta)
}

/// One forward-Euler step of the full observer. `f0` and `regressor` are
/// evaluated at the estimated state `(p̂, q̂)`; only the measured position and
/// the input are consumed. `theta_hat` is the current parameter estimate
/// (one column per uncertainty output block; a single column for the shipped
/// plant).
#[allow(clippy::too_many_arguments)]
pub fn observer_step<F, S>(
    state: &mut ObserverState,
    p_measured: &VecN,
    u: &VecN,
    theta_hat: &Mat,
    f0: F,
    regressor: S,
    gains: &ObserverGains,
    dt: f64,
) -> Result<(), ObserverError>
where
    F: FnOnce(&VecN, &VecN, &VecN) -> VecN,
    S: FnOnce(&VecN, &VecN, &VecN) -> Mat,
{
    if dt == 0.0 {
        return Ok(());
    }
    let p_tilde = p_measured.sub(&state.p_hat)?;
    let eta = eta_update(state, &p_tilde, gains, dt)?;
    let nu = feedback_nu(&p_tilde, &eta, gains)?;

    let mut accel = f0(&state.p_hat, &state.q_hat, u);
    let sigma = regressor(&state.p_hat, &state.q_hat, u);
    let g_hat = sigma.tr_matvec(&theta_hat.col(0))?;
    accel.axpy(1.0, &g_hat)?;
    accel.axpy(1.0, &nu)?;

    state.p_hat.axpy(dt, &state.q_hat)?;
    state.q_hat.axpy(dt, &accel)?;
    Ok(())
}
