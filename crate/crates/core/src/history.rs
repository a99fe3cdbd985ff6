//! Fixed-capacity history stacks and the dwell-time purging state machine.
//!
//! A stack stores triples `(Pᵢ, F̂ᵢ, Ĝᵢ)` together with a cached Gram matrix
//! `𝒢 = Σ ĜᵢĜᵢᵀ`. Insertion into a full stack follows singular-value
//! maximization: a slot is replaced only when the replacement strictly
//! increases `s_min(𝒢)` by the configured factor, so `s_min` never decreases.
//!
//! The purge controller keeps a main stack (used by the estimator) and a
//! transient stack (being recorded). Once the transient stack is rich enough
//! relative to the best `s_min` seen so far and the dwell time has elapsed,
//! the main stack is replaced wholesale by the transient one.

use crate::numerics::{min_singular_value, Mat, NumError, VecN};
use alloc::vec::Vec as AVec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum HistoryError {
    Dimension(NumError),
    /// Candidate shapes disagree with the stack.
    ShapeMismatch,
}

impl fmt::Display for HistoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryError::Dimension(e) => write!(f, "{e}"),
            HistoryError::ShapeMismatch => write!(f, "data point shape disagrees with stack"),
        }
    }
}

impl core::error::Error for HistoryError {}

impl From<NumError> for HistoryError {
    fn from(e: NumError) -> Self {
        HistoryError::Dimension(e)
    }
}

/// One recorded triple satisfying `P = F̂ + θᵀĜ + error`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    /// Position-window delta, length n.
    pub p: VecN,
    /// Double integral of f⁰ at the estimated state, length n.
    pub f_hat: VecN,
    /// Double integral of the regressor at the estimated state, p×n.
    pub g_hat: Mat,
    pub recorded_at: f64,
}

impl DataPoint {
    pub fn new(p: VecN, f_hat: VecN, g_hat: Mat, recorded_at: f64) -> Self {
        assert_eq!(p.dim(), f_hat.dim());
        assert_eq!(p.dim(), g_hat.cols());
        Self {
            p,
            f_hat,
            g_hat,
            recorded_at,
        }
    }

    pub fn zero(param_dim: usize, state_dim: usize) -> Self {
        Self {
            p: VecN::zeros(state_dim),
            f_hat: VecN::zeros(state_dim),
            g_hat: Mat::zeros(param_dim, state_dim),
            recorded_at: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HistoryStack {
    capacity: usize,
    param_dim: usize,
    points: AVec<DataPoint>,
    gram: Mat,
}

impl HistoryStack {
    pub fn new(capacity: usize, param_dim: usize) -> Self {
        assert!(capacity > 0 && param_dim > 0);
        Self {
            capacity,
            param_dim,
            points: AVec::with_capacity(capacity),
            gram: Mat::zeros(param_dim, param_dim),
        }
    }

    /// A stack pre-filled to capacity with all-zero points (the default
    /// initial main stack: the estimator is effectively idle until the
    /// first purge).
    pub fn zero_filled(capacity: usize, param_dim: usize, state_dim: usize) -> Self {
        let mut s = Self::new(capacity, param_dim);
        for _ in 0..capacity {
            s.points.push(DataPoint::zero(param_dim, state_dim));
        }
        s
    }

    /// A synthetic full-rank stack: scaled parameter-axis basis blocks with
    /// zero `P` and `F̂`, cycled through the slots.
    pub fn synthetic_full_rank(
        capacity: usize,
        param_dim: usize,
        state_dim: usize,
        scale: f64,
    ) -> Self {
        let mut s = Self::new(capacity, param_dim);
        for slot in 0..capacity {
            let mut g = Mat::zeros(param_dim, state_dim);
            for j in 0..state_dim {
                g[((slot * state_dim + j) % param_dim, j)] = scale;
            }
            let dp = DataPoint::new(
                VecN::zeros(state_dim),
                VecN::zeros(state_dim),
                g,
                0.0,
            );
            s.gram.add_outer(1.0, &dp.g_hat).expect("shapes fixed");
            s.points.push(dp);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.points.len() >= self.capacity
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    /// Cached Gram matrix `𝒢 = Σ ĜᵢĜᵢᵀ`.
    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    /// Recompute the Gram matrix from scratch (cache audit for tests).
    pub fn recompute_gram(&self) -> Mat {
        let mut g = Mat::zeros(self.param_dim, self.param_dim);
        for dp in &self.points {
            g.add_outer(1.0, &dp.g_hat).expect("shapes fixed");
        }
        g
    }

    pub fn smin(&self) -> f64 {
        min_singular_value(&self.gram).expect("gram symmetric by construction")
    }

    pub fn is_full_rank(&self, c_lower: f64) -> bool {
        debug_assert!(c_lower > 0.0);
        self.smin() > c_lower
    }

    fn check_shape(&self, candidate: &DataPoint) -> Result<(), HistoryError> {
        if candidate.g_hat.rows() != self.param_dim {
            return Err(HistoryError::ShapeMismatch);
        }
        if let Some(first) = self.points.first() {
            if first.g_hat.cols() != candidate.g_hat.cols()
                || first.p.dim() != candidate.p.dim()
            {
                return Err(HistoryError::ShapeMismatch);
            }
        }
        Ok(())
    }

    /// Insert a candidate. Below capacity the candidate is appended
    /// unconditionally. At capacity, slot `j` may be replaced only when
    /// `s_min(𝒢 - ĜⱼĜⱼᵀ + Ĝ*Ĝ*ᵀ) > (1+ζ)·s_min(𝒢)`; among passing slots the
    /// one yielding the largest new `s_min` wins (ties to the lowest index).
    pub fn try_insert(
        &mut self,
        candidate: DataPoint,
        zeta: f64,
    ) -> Result<bool, HistoryError> {
        self.check_shape(&candidate)?;
        if !self.is_full() {
            self.gram.add_outer(1.0, &candidate.g_hat)?;
            self.points.push(candidate);
            return Ok(true);
        }
        let s_current = self.smin();
        let mut best: Option<(usize, f64, Mat)> = None;
        for j in 0..self.points.len() {
            let mut trial = self.gram.clone();
            trial.add_outer(-1.0, &self.points[j].g_hat)?;
            trial.add_outer(1.0, &candidate.g_hat)?;
            let trial = trial.symmetrized()?;
            let s_trial = min_singular_value(&trial)?;
            // smax criterion: replace only on strict improvement by 1+ζ.
            if s_current < s_trial / (1.0 + zeta) {
                let better = match &best {
                    Some((_, s_best, _)) => s_trial > *s_best,
                    None => true,
                };
                if better {
                    best = Some((j, s_trial, trial));
                }
            }
        }
        match best {
            Some((j, _, gram)) => {
                self.points[j] = candidate;
                self.gram = gram;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

/// Purging gates and thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurgeSettings {
    /// Minimum time between purges.
    pub dwell_time: f64,
    /// Threshold fraction ξ ∈ (0, 1] of the best `s_min` seen so far.
    pub xi: f64,
    /// Improvement factor ζ ≥ 0 for singular-value-maximization insertion.
    pub zeta: f64,
    /// τ₁ + τ₂: candidates arriving within this window of the last purge
    /// are ignored.
    pub window_deadtime: f64,
    /// Full-rank floor the transient stack must clear before a purge.
    pub c_lower: f64,
}

/// Events emitted by the purge controller, for the run log.
#[derive(Debug, Clone, PartialEq)]
pub enum StackEvent {
    Inserted {
        t: f64,
        smin_before: f64,
        smin_after: f64,
    },
    Rejected {
        t: f64,
        smin: f64,
    },
    Purged {
        t: f64,
        main_smin_before: f64,
        main_smin_after: f64,
    },
}

/// Dual-stack dwell-time purging state machine.
#[derive(Debug, Clone)]
pub struct PurgeController {
    main: HistoryStack,
    transient: HistoryStack,
    /// Time of the last purge (δ).
    last_purge: f64,
    /// Highest transient `s_min` banked at a purge so far.
    best_smin: f64,
    settings: PurgeSettings,
}

impl PurgeController {
    pub fn new(main: HistoryStack, start_time: f64, settings: PurgeSettings) -> Self {
        let transient = HistoryStack::new(main.capacity(), main.param_dim());
        Self {
            main,
            transient,
            last_purge: start_time,
            best_smin: 0.0,
            settings,
        }
    }

    pub fn main(&self) -> &HistoryStack {
        &self.main
    }

    pub fn transient(&self) -> &HistoryStack {
        &self.transient
    }

    pub fn last_purge(&self) -> f64 {
        self.last_purge
    }

    pub fn best_smin(&self) -> f64 {
        self.best_smin
    }

    /// Whether a candidate offered at `t` would clear the post-purge
    /// dead-time gate. Lets callers skip computing quadrature triples that
    /// would be ignored anyway.
    pub fn wants_candidate(&self, t: f64) -> bool {
        t > self.last_purge + self.settings.window_deadtime
    }

    /// Offer a candidate and run the purge checks. Returns whether a purge
    /// happened; bookkeeping events are appended to `events`.
    pub fn tick(
        &mut self,
        t: f64,
        candidate: Option<DataPoint>,
        events: &mut AVec<StackEvent>,
    ) -> Result<bool, HistoryError> {
        let Some(candidate) = candidate else {
            return Ok(false);
        };
        if !self.wants_candidate(t) {
            return Ok(false);
        }
        let smin_before = self.transient.smin();
        let accepted = self.transient.try_insert(candidate, self.settings.zeta)?;
        let smin = self.transient.smin();
        events.push(if accepted {
            StackEvent::Inserted {
                t,
                smin_before,
                smin_after: smin,
            }
        } else {
            StackEvent::Rejected { t, smin }
        });

        if smin >= self.settings.xi * self.best_smin
            && self.transient.is_full_rank(self.settings.c_lower)
            && t - self.last_purge >= self.settings.dwell_time
        {
            let main_smin_before = self.main.smin();
            let fresh = HistoryStack::new(self.transient.capacity(), self.transient.param_dim());
            self.main = core::mem::replace(&mut self.transient, fresh);
            self.last_purge = t;
            if self.best_smin < smin {
                self.best_smin = smin;
            }
            events.push(StackEvent::Purged {
                t,
                main_smin_before,
                main_smin_after: smin,
            });
            return Ok(true);
        }
        Ok(false)
    }
}
