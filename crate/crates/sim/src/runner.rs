//! The fixed-step simulation loop on the two-link arm.
//!
//! Per step at time t (state indexed at t): (1) controller torque from the
//! truth state; (2) truth forward-Euler step to t+Ts; (3) noisy position
//! measurement; (4) observer step; (5) buffer appends (measured p; f⁰ and Σ
//! at the estimated state); (6) on the candidate grid, quadrature triple
//! offered to the purge controller; (7) estimator step against the main
//! stack; (8) decimated logging. Identical config and seed give identical
//! logs.

use crate::config::RunConfig;
use anyhow::{anyhow, bail, Result};
use cl_observer_core::estimator::{estimator_step, EstimatorGains, EstimatorState};
use cl_observer_core::history::{DataPoint, HistoryStack, PurgeController, PurgeSettings, StackEvent};
use cl_observer_core::noise::NoiseModel;
use cl_observer_core::numerics::{Mat, VecN};
use cl_observer_core::observer::{observer_step, ObserverGains, ObserverState};
use cl_observer_core::plant::{tracking_torque, PdGains, SecondOrderPlant, TwoLinkArm};
use cl_observer_core::windows::{compute_triplet, SignalBuffer, WindowConfig};

/// One decimated trajectory record.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub p_hat: [f64; 2],
    pub q_hat: [f64; 2],
    pub theta_hat: [f64; 4],
    /// ‖x̃‖ = ‖(p−p̂, q−q̂)‖.
    pub x_err: f64,
    /// ‖θ − θ̂‖.
    pub theta_err: f64,
    pub smin_main: f64,
    pub smin_transient: f64,
    pub gamma_eig_min: f64,
    pub gamma_eig_max: f64,
    pub u: [f64; 2],
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub records: Vec<Record>,
    pub events: Vec<StackEvent>,
    /// Resolved config echo + seed + code version.
    pub meta: String,
    pub purge_count: usize,
    /// Terminal internals for post-run analysis; absent for duration 0.
    pub final_state: Option<FinalState>,
}

/// Snapshot of the loop internals at the end of a run.
#[derive(Debug, Clone)]
pub struct FinalState {
    pub estimator: EstimatorState,
    pub main_stack: HistoryStack,
    pub truth_p: VecN,
    pub truth_q: VecN,
    pub observer: ObserverState,
}

fn pair(v: &VecN) -> [f64; 2] {
    [v[0], v[1]]
}

pub fn run(config: &RunConfig) -> Result<RunLog> {
    config.validate()?;
    let h = config.sample_period;
    let arm = TwoLinkArm::default();
    let ctrl_gains = PdGains::default();
    let obs_gains = ObserverGains::new(config.alpha, config.k, config.beta)
        .map_err(|e| anyhow!("{e}"))?;
    let est_gains = EstimatorGains::new(config.k_theta, config.beta1);
    let window = WindowConfig::new(config.tau1, config.tau2, 0.0, h).map_err(|e| anyhow!("{e}"))?;
    let theta_true = arm.theta_true().clone();

    let mut noise = NoiseModel::new(config.seed, config.noise_variance);

    // Truth state (tracking starts at rest in position, moving in velocity).
    let mut p = VecN::zeros(2);
    let mut q = VecN::from_slice(&[5.0, 5.0]);

    let y0 = noise.corrupt(&p);
    let mut observer = ObserverState::from_first_measurement(&y0);
    let mut estimator = EstimatorState::new(4, config.gamma0_scale);

    let main_stack = if config.init_stack_full_rank {
        HistoryStack::synthetic_full_rank(config.stack_capacity, 4, 2, 1.0)
    } else {
        HistoryStack::zero_filled(config.stack_capacity, 4, 2)
    };
    let mut purge = PurgeController::new(
        main_stack,
        0.0,
        PurgeSettings {
            dwell_time: config.dwell_time,
            xi: config.xi,
            zeta: config.zeta,
            window_deadtime: config.tau1 + config.tau2,
            c_lower: config.c_lower,
        },
    );

    let mut p_buf = SignalBuffer::for_window(h, &window);
    let mut f_buf = SignalBuffer::for_window(h, &window);
    let mut g_buf = SignalBuffer::for_window(h, &window);

    let mut log = RunLog {
        meta: format!(
            "cl-sim {}\n\n{}",
            env!("CARGO_PKG_VERSION"),
            config.echo()
        ),
        ..RunLog::default()
    };

    let steps = (config.duration / h).round() as usize;
    let candidate_every = (config.candidate_period / h).round() as usize;

    // Seed the buffers at t = 0 so the first active window has full support.
    let mut u = tracking_torque(&arm, &p, &q, 0.0, &ctrl_gains);
    p_buf.push(0.0, y0).map_err(|e| anyhow!("{e}"))?;
    f_buf
        .push(0.0, arm.f0(&observer.p_hat, &observer.q_hat, &u))
        .map_err(|e| anyhow!("{e}"))?;
    g_buf
        .push(0.0, arm.regressor(&observer.p_hat, &observer.q_hat, &u))
        .map_err(|e| anyhow!("{e}"))?;

    let record = |t: f64,
                      p: &VecN,
                      q: &VecN,
                      observer: &ObserverState,
                      estimator: &EstimatorState,
                      purge: &PurgeController,
                      gamma_eig: (f64, f64),
                      u: &VecN| {
        let x_err = p
            .sub(&observer.p_hat)
            .expect("dims fixed")
            .norm()
            .hypot(q.sub(&observer.q_hat).expect("dims fixed").norm());
        let mut theta_err_v = theta_true.clone();
        for i in 0..4 {
            theta_err_v.as_mut_slice()[i] -= estimator.theta_hat[(i, 0)];
        }
        Record {
            t,
            p: pair(p),
            q: pair(q),
            p_hat: pair(&observer.p_hat),
            q_hat: pair(&observer.q_hat),
            theta_hat: core::array::from_fn(|i| estimator.theta_hat[(i, 0)]),
            x_err,
            theta_err: theta_err_v.norm(),
            smin_main: purge.main().smin(),
            smin_transient: purge.transient().smin(),
            gamma_eig_min: gamma_eig.0,
            gamma_eig_max: gamma_eig.1,
            u: pair(u),
        }
    };

    if steps == 0 {
        // Duration 0: metadata only.
        return Ok(log);
    }

    for step in 0..steps {
        let t_next = (step + 1) as f64 * h;

        // (1) Controller torque for the current truth state (already in `u`);
        // (2) truth forward-Euler step of the closed loop.
        let accel = arm.truth_accel(&p, &q, &u);
        p.axpy(h, &q).expect("dims fixed");
        q.axpy(h, &accel).expect("dims fixed");

        // (3) Measurement; (4) observer step.
        let y = noise.corrupt(&p);
        observer_step(
            &mut observer,
            &y,
            &u,
            &estimator.theta_hat,
            |ph, qh, uu| arm.f0(ph, qh, uu),
            |ph, qh, uu| arm.regressor(ph, qh, uu),
            &obs_gains,
            h,
        )
        .map_err(|e| anyhow!("observer at t={t_next}: {e}"))?;

        // (5) Buffers at t+Ts: integrands at the estimated state, paired
        // with the torque the controller issues at t+Ts.
        u = tracking_torque(&arm, &p, &q, t_next, &ctrl_gains);
        p_buf.push(t_next, y).map_err(|e| anyhow!("{e}"))?;
        f_buf
            .push(t_next, arm.f0(&observer.p_hat, &observer.q_hat, &u))
            .map_err(|e| anyhow!("{e}"))?;
        g_buf
            .push(t_next, arm.regressor(&observer.p_hat, &observer.q_hat, &u))
            .map_err(|e| anyhow!("{e}"))?;

        // (6) Candidate triple on its grid; skipped when the dead-time gate
        // would drop it anyway.
        if (step + 1) % candidate_every == 0 && purge.wants_candidate(t_next) {
            let (pw, fw, gw) = compute_triplet(&p_buf, &f_buf, &g_buf, t_next, &window)
                .map_err(|e| anyhow!("quadrature at t={t_next}: {e}"))?;
            let inv_area = 1.0 / (config.tau1 * config.tau2);
            let candidate = DataPoint::new(
                pw.scale(inv_area),
                fw.scale(inv_area),
                gw.scale(inv_area),
                t_next,
            );
            let purged = purge
                .tick(t_next, Some(candidate), &mut log.events)
                .map_err(|e| anyhow!("history stack at t={t_next}: {e}"))?;
            if purged {
                log.purge_count += 1;
                if config.gamma_reset_on_purge {
                    estimator.gamma = Mat::identity(4).scale(config.gamma0_scale);
                }
            }
        }

        // (7) Estimator step against the main stack.
        let report = estimator_step(&mut estimator, purge.main(), &est_gains, h)
            .map_err(|e| anyhow!("estimator at t={t_next}: {e}"))?;

        // (8) Decimated logging.
        if (step + 1) % config.log_decimation == 0 || step + 1 == steps {
            log.records.push(record(
                t_next,
                &p,
                &q,
                &observer,
                &estimator,
                &purge,
                (report.gamma_eig_min, report.gamma_eig_max),
                &u,
            ));
        }
    }

    if let Some(last) = log.records.last() {
        if !(last.x_err.is_finite() && last.theta_err.is_finite()) {
            bail!("run diverged: non-finite errors at t={}", last.t);
        }
    }
    log.final_state = Some(FinalState {
        estimator,
        main_stack: purge.main().clone(),
        truth_p: p,
        truth_q: q,
        observer,
    });
    Ok(log)
}
