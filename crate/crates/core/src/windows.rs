//! Timed ring buffers over sampled signals and the window operators that
//! turn them into regression data: the four-point position delta
//! `P(t) = p(t-τ₂-τ₁) - p(t-τ₁) + p(t) - p(t-τ₂)` and the iterated
//! trapezoidal approximation of the double integral
//! `f ↦ ∫_{t-τ₂}^{t} ∫_{λ-τ₁}^{λ} f dτ dλ`.
//!
//! Both window lengths are required to be integer multiples of the sample
//! period so window endpoints always land on grid nodes.

use crate::numerics::{Mat, VecN};
use alloc::collections::VecDeque;
use core::fmt;

/// Tolerance on grid alignment of timestamps, in fractions of the sample
/// period.
const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum WindowError {
    /// tau1/tau2 non-positive or not an integer multiple of the period.
    BadWindow,
    /// Pushed sample does not continue the uniform time grid.
    OffGrid { t: f64 },
    /// The requested lookback is not covered by the buffer.
    InsufficientHistory { t: f64 },
    EmptyBuffer,
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::BadWindow => {
                write!(f, "window lengths must be positive multiples of the sample period")
            }
            WindowError::OffGrid { t } => write!(f, "sample at t={t} is off the sample grid"),
            WindowError::InsufficientHistory { t } => {
                write!(f, "buffer does not cover the lookback required at t={t}")
            }
            WindowError::EmptyBuffer => write!(f, "buffer is empty"),
        }
    }
}

impl core::error::Error for WindowError {}

/// Values that can be accumulated by the quadrature operators.
pub trait Accumulate: Clone {
    fn zero_like(&self) -> Self;
    /// `self += a * rhs` (shapes are guaranteed equal by the buffer).
    fn accumulate(&mut self, a: f64, rhs: &Self);
}

impl Accumulate for VecN {
    fn zero_like(&self) -> Self {
        VecN::zeros(self.dim())
    }
    fn accumulate(&mut self, a: f64, rhs: &Self) {
        self.axpy(a, rhs).expect("buffer samples share one shape");
    }
}

impl Accumulate for Mat {
    fn zero_like(&self) -> Self {
        Mat::zeros(self.rows(), self.cols())
    }
    fn accumulate(&mut self, a: f64, rhs: &Self) {
        self.axpy(a, rhs).expect("buffer samples share one shape");
    }
}

/// Uniformly sampled signal history with fixed capacity; the oldest sample
/// is evicted first.
#[derive(Debug, Clone)]
pub struct SignalBuffer<T> {
    sample_period: f64,
    capacity: usize,
    samples: VecDeque<(f64, T)>,
}

impl<T: Accumulate> SignalBuffer<T> {
    pub fn new(sample_period: f64, capacity: usize) -> Self {
        assert!(sample_period > 0.0 && capacity > 0);
        Self {
            sample_period,
            capacity,
            samples: VecDeque::with_capacity(capacity + 1),
        }
    }

    /// Capacity sized to cover a `tau1 + tau2` lookback window.
    pub fn for_window(sample_period: f64, cfg: &WindowConfig) -> Self {
        let span = libm::round((cfg.tau1 + cfg.tau2) / sample_period) as usize;
        Self::new(sample_period, span + 1)
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<&(f64, T)> {
        self.samples.back()
    }

    pub fn push(&mut self, t: f64, value: T) -> Result<(), WindowError> {
        if let Some((t_last, _)) = self.samples.back() {
            if libm::fabs(t - t_last - self.sample_period) > 1e-12 {
                return Err(WindowError::OffGrid { t });
            }
        }
        self.samples.push_back((t, value));
        while self.samples.len() > self.capacity {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Index of the sample recorded at time `t`, if covered.
    fn index_at(&self, t: f64) -> Result<usize, WindowError> {
        let (t0, _) = self.samples.front().ok_or(WindowError::EmptyBuffer)?;
        let steps = (t - t0) / self.sample_period;
        let idx = libm::round(steps);
        if idx < 0.0
            || idx as usize >= self.samples.len()
            || libm::fabs(steps - idx) > GRID_TOL
        {
            return Err(WindowError::InsufficientHistory { t });
        }
        Ok(idx as usize)
    }

    pub fn sample_at(&self, t: f64) -> Result<&T, WindowError> {
        Ok(&self.samples[self.index_at(t)?].1)
    }
}

/// Integration window configuration: lengths of the inner (`tau1`) and
/// outer (`tau2`) integrals and the recording start time `start_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub tau1: f64,
    pub tau2: f64,
    pub start_time: f64,
}

impl WindowConfig {
    pub fn new(
        tau1: f64,
        tau2: f64,
        start_time: f64,
        sample_period: f64,
    ) -> Result<Self, WindowError> {
        if !(tau1 > 0.0 && tau2 > 0.0 && sample_period > 0.0) {
            return Err(WindowError::BadWindow);
        }
        for tau in [tau1, tau2] {
            let steps = tau / sample_period;
            if libm::fabs(steps - libm::round(steps)) > GRID_TOL || libm::round(steps) < 1.0 {
                return Err(WindowError::BadWindow);
            }
        }
        Ok(Self {
            tau1,
            tau2,
            start_time,
        })
    }

    /// First time at which the window operators carry information.
    pub fn active_from(&self) -> f64 {
        self.start_time + self.tau1 + self.tau2
    }

    fn is_active(&self, t: f64) -> bool {
        // Grid-tolerant comparison so t == start_time + tau1 + tau2 counts
        // as active regardless of rounding in the accumulated time.
        t >= self.active_from() - 1e-9
    }
}

/// Four-point position combination; zero before the window is filled.
pub fn window_position_delta(
    buf: &SignalBuffer<VecN>,
    t: f64,
    cfg: &WindowConfig,
) -> Result<VecN, WindowError> {
    let (_, latest) = buf.latest().ok_or(WindowError::EmptyBuffer)?;
    if !cfg.is_active(t) {
        return Ok(latest.zero_like());
    }
    let mut out = buf.sample_at(t - cfg.tau2 - cfg.tau1)?.clone();
    out.accumulate(-1.0, buf.sample_at(t - cfg.tau1)?);
    out.accumulate(1.0, buf.sample_at(t)?);
    out.accumulate(-1.0, buf.sample_at(t - cfg.tau2)?);
    Ok(out)
}

/// Iterated trapezoidal approximation of the double integral over
/// `[t-τ₂, t] × [λ-τ₁, λ]`. The inner integral is recomputed from the
/// buffer at each outer node.
pub fn double_integral<T: Accumulate>(
    buf: &SignalBuffer<T>,
    t: f64,
    cfg: &WindowConfig,
) -> Result<T, WindowError> {
    let h = buf.sample_period;
    let n1 = libm::round(cfg.tau1 / h) as usize;
    let n2 = libm::round(cfg.tau2 / h) as usize;
    let base = buf.index_at(t - cfg.tau1 - cfg.tau2)?;
    let top = buf.index_at(t)?;
    debug_assert_eq!(top, base + n1 + n2);
    let (_, sample0) = &buf.samples[base];
    let mut outer = sample0.zero_like();
    for j in 0..=n2 {
        let outer_w = if j == 0 || j == n2 { 0.5 } else { 1.0 };
        let mut inner = sample0.zero_like();
        for m in 0..=n1 {
            let inner_w = if m == 0 || m == n1 { 0.5 } else { 1.0 };
            inner.accumulate(h * inner_w, &buf.samples[base + j + m].1);
        }
        outer.accumulate(h * outer_w, &inner);
    }
    Ok(outer)
}

/// The candidate triple `(P, F̂, Ĝ)` for the history stack; all three are
/// simultaneously zero before the recording window is filled.
pub fn compute_triplet(
    p_buf: &SignalBuffer<VecN>,
    f0_buf: &SignalBuffer<VecN>,
    regressor_buf: &SignalBuffer<Mat>,
    t: f64,
    cfg: &WindowConfig,
) -> Result<(VecN, VecN, Mat), WindowError> {
    if !cfg.is_active(t) {
        let (_, p) = p_buf.latest().ok_or(WindowError::EmptyBuffer)?;
        let (_, f) = f0_buf.latest().ok_or(WindowError::EmptyBuffer)?;
        let (_, g) = regressor_buf.latest().ok_or(WindowError::EmptyBuffer)?;
        return Ok((p.zero_like(), f.zero_like(), g.zero_like()));
    }
    let p = window_position_delta(p_buf, t, cfg)?;
    let f_hat = double_integral(f0_buf, t, cfg)?;
    let g_hat = double_integral(regressor_buf, t, cfg)?;
    Ok((p, f_hat, g_hat))
}
