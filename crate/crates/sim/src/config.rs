//! Run configuration: flat `key = value` text files with `#` comments.
//! Unknown keys are errors; every key has a default so an empty file is the
//! noise-free baseline run.

use anyhow::{anyhow, bail, Context, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Full parameterization of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Inner integration window τ₁, seconds.
    pub tau1: f64,
    /// Outer integration window τ₂, seconds.
    pub tau2: f64,
    /// History stack capacity N.
    pub stack_capacity: usize,
    /// Γ(t₀) = gamma0_scale·I.
    pub gamma0_scale: f64,
    /// Forgetting rate β₁.
    pub beta1: f64,
    /// Observer gains α, k, β.
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    /// Insertion improvement factor ζ.
    pub zeta: f64,
    /// Purge threshold fraction ξ.
    pub xi: f64,
    /// Adaptation gain k_θ; defaults to 0.5/N when not set.
    pub k_theta: f64,
    /// Minimum time between purges 𝒯; defaults to 2·(τ₁+τ₂) when not set.
    pub dwell_time: f64,
    /// How often a candidate triple is offered to the purge controller.
    pub candidate_period: f64,
    /// Fixed integration step Ts.
    pub sample_period: f64,
    /// Simulated time span.
    pub duration: f64,
    /// Measurement noise variance (0 disables the noise model exactly).
    pub noise_variance: f64,
    pub seed: u64,
    /// Start from a synthetic full-rank main stack instead of a zero stack.
    pub init_stack_full_rank: bool,
    /// Reset Γ to Γ(t₀) at each purge event.
    pub gamma_reset_on_purge: bool,
    /// Full-rank floor c̲ the transient stack must clear before a purge.
    pub c_lower: f64,
    /// Log one trajectory record every this many steps.
    pub log_decimation: usize,
}

impl Default for RunConfig {
    /// The noise-free baseline run.
    fn default() -> Self {
        Self {
            tau1: 0.5,
            tau2: 0.3,
            stack_capacity: 50,
            gamma0_scale: 1.0,
            beta1: 0.5,
            alpha: 2.0,
            k: 10.0,
            beta: 2.0,
            zeta: 0.0,
            xi: 0.95,
            k_theta: 0.5 / 50.0,
            dwell_time: 2.0 * (0.5 + 0.3),
            candidate_period: 0.05,
            sample_period: 5e-4,
            duration: 30.0,
            noise_variance: 0.0,
            seed: 0,
            init_stack_full_rank: false,
            gamma_reset_on_purge: false,
            c_lower: 1e-6,
            log_decimation: 10,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => bail!("expected true/false, got `{v}`"),
    }
}

fn is_grid_multiple(value: f64, period: f64) -> bool {
    let steps = value / period;
    steps >= 0.5 && (steps - steps.round()).abs() <= 1e-6
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let fv = || -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| anyhow!("key `{key}`: expected a number, got `{v}`"))
        };
        match key {
            "tau1" => self.tau1 = fv()?,
            "tau2" => self.tau2 = fv()?,
            "stack_capacity" => {
                self.stack_capacity = v
                    .parse()
                    .map_err(|_| anyhow!("key `stack_capacity`: expected a count, got `{v}`"))?;
                // Preserve the k_θ = 0.5/N default unless k_theta was set
                // explicitly (explicit assignments win regardless of order
                // only when they come after; documented in the README).
                self.k_theta = 0.5 / self.stack_capacity as f64;
            }
            "gamma0_scale" => self.gamma0_scale = fv()?,
            "beta1" => self.beta1 = fv()?,
            "alpha" => self.alpha = fv()?,
            "k" => self.k = fv()?,
            "beta" => self.beta = fv()?,
            "zeta" => self.zeta = fv()?,
            "xi" => self.xi = fv()?,
            "k_theta" => self.k_theta = fv()?,
            "dwell_time" => self.dwell_time = fv()?,
            "candidate_period" => self.candidate_period = fv()?,
            "sample_period" => self.sample_period = fv()?,
            "duration" => self.duration = fv()?,
            "noise_variance" => self.noise_variance = fv()?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| anyhow!("key `seed`: expected an integer, got `{v}`"))?
            }
            "init_stack_full_rank" => {
                self.init_stack_full_rank =
                    parse_bool(v).with_context(|| format!("key `{key}`"))?
            }
            "gamma_reset_on_purge" => {
                self.gamma_reset_on_purge =
                    parse_bool(v).with_context(|| format!("key `{key}`"))?
            }
            "c_lower" => self.c_lower = fv()?,
            "log_decimation" => {
                self.log_decimation = v
                    .parse()
                    .map_err(|_| anyhow!("key `log_decimation`: expected a count, got `{v}`"))?
            }
            other => bail!("unknown config key `{other}`"),
        }
        // Track tau changes through the dwell-time default in the same way.
        if key == "tau1" || key == "tau2" {
            self.dwell_time = 2.0 * (self.tau1 + self.tau2);
        }
        Ok(())
    }

    /// Parse the flat key=value format. Later assignments override earlier
    /// ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut explicit_k_theta = false;
        let mut explicit_dwell = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            cfg.set(key, value)
                .with_context(|| format!("line {}", lineno + 1))?;
            explicit_k_theta |= key == "k_theta";
            explicit_dwell |= key == "dwell_time";
            // Re-apply explicit choices that a later default-coupled key
            // (stack_capacity, tau1, tau2) would otherwise clobber.
            if explicit_k_theta && key == "stack_capacity" {
                bail!(
                    "line {}: set `stack_capacity` before `k_theta` (the k_theta default depends on it)",
                    lineno + 1
                );
            }
            if explicit_dwell && (key == "tau1" || key == "tau2") {
                bail!(
                    "line {}: set `tau1`/`tau2` before `dwell_time` (the dwell default depends on them)",
                    lineno + 1
                );
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Check cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        let h = self.sample_period;
        if !(h > 0.0 && h.is_finite()) {
            bail!("sample_period must be positive");
        }
        for (name, v) in [
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("candidate_period", self.candidate_period),
        ] {
            if !is_grid_multiple(v, h) {
                bail!("{name} = {v} is not a positive integer multiple of sample_period = {h}");
            }
        }
        if self.alpha <= 0.0 || self.k <= 0.0 || self.beta <= 0.0 {
            bail!("observer gains alpha, k, beta must be strictly positive");
        }
        if self.k_theta <= 0.0 {
            bail!("k_theta must be strictly positive");
        }
        if self.beta1 < 0.0 {
            bail!("beta1 must be non-negative");
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            bail!("xi must lie in (0, 1]");
        }
        if self.zeta < 0.0 {
            bail!("zeta must be non-negative");
        }
        if self.gamma0_scale <= 0.0 {
            bail!("gamma0_scale must be strictly positive");
        }
        if self.stack_capacity == 0 {
            bail!("stack_capacity must be at least 1");
        }
        if self.duration < 0.0 || !self.duration.is_finite() {
            bail!("duration must be finite and non-negative");
        }
        if self.noise_variance < 0.0 {
            bail!("noise_variance must be non-negative");
        }
        if self.dwell_time <= 0.0 {
            bail!("dwell_time must be strictly positive");
        }
        if self.c_lower <= 0.0 {
            bail!("c_lower must be strictly positive");
        }
        if self.log_decimation == 0 {
            bail!("log_decimation must be at least 1");
        }
        Ok(())
    }

    /// Resolved config as key=value lines (echoed into meta.txt).
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tau1 = {}", self.tau1);
        let _ = writeln!(s, "tau2 = {}", self.tau2);
        let _ = writeln!(s, "stack_capacity = {}", self.stack_capacity);
        let _ = writeln!(s, "gamma0_scale = {}", self.gamma0_scale);
        let _ = writeln!(s, "beta1 = {}", self.beta1);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "zeta = {}", self.zeta);
        let _ = writeln!(s, "xi = {}", self.xi);
        let _ = writeln!(s, "k_theta = {}", self.k_theta);
        let _ = writeln!(s, "dwell_time = {}", self.dwell_time);
        let _ = writeln!(s, "candidate_period = {}", self.candidate_period);
        let _ = writeln!(s, "sample_period = {}", self.sample_period);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "noise_variance = {}", self.noise_variance);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "init_stack_full_rank = {}", self.init_stack_full_rank);
        let _ = writeln!(s, "gamma_reset_on_purge = {}", self.gamma_reset_on_purge);
        let _ = writeln!(s, "c_lower = {}", self.c_lower);
        let _ = writeln!(s, "log_decimation = {}", self.log_decimation);
        s
    }
}
