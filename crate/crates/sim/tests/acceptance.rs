//! Acceptance gate: one test (and one printed pass line) per criterion.
//!
//! 1. Quadrature order of the double integral.
//! 2. Affine identity of the windowed data on the manipulator.
//! 3. Frozen-stack gradient flow matches the batch least-squares oracle.
//! 4. Scalar Riccati gain matches its closed form.
//! 5. Purging state machine: scripted branch walk plus a monotonicity fuzz.
//! 6. Noise-free end-to-end convergence.
//! 7. Noisy end-to-end boundedness across seeds.
//! 8. Γ spectrum stays positive and bounded across the end-to-end runs.
//! 9. Determinism: repeated runs are byte-identical.

use std::sync::OnceLock;
use std::time::Instant;

use cl_observer_core::estimator::{
    batch_least_squares, estimator_step, theta_dot, EstimatorGains, EstimatorState,
};
use cl_observer_core::history::{
    DataPoint, HistoryStack, PurgeController, PurgeSettings, StackEvent,
};
use cl_observer_core::numerics::{Mat, VecN};
use cl_observer_core::plant::{tracking_torque, PdGains, SecondOrderPlant, TwoLinkArm};
use cl_observer_core::windows::{compute_triplet, double_integral, SignalBuffer, WindowConfig};
use cl_observer_sim::config::RunConfig;
use cl_observer_sim::output::{events_csv, trajectory_csv};
use cl_observer_sim::runner::{run, RunLog};

const THETA_TRUE_NORM: f64 = 10.306206867688681; // ‖(5.3, 1.1, 8.45, 2.35)‖

fn noise_free_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.set("dwell_time", "0.9").unwrap();
    cfg.set("candidate_period", "0.03").unwrap();
    cfg
}

fn noisy_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("tau1", "0.9"),
        ("tau2", "0.5"),
        ("stack_capacity", "150"),
        ("noise_variance", "0.001"),
        ("dwell_time", "0.9"),
        ("candidate_period", "0.03"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg.seed = seed;
    cfg
}

/// The criterion-6 run (log, wall seconds), shared by criteria 6, 8 and 9.
fn noise_free_run() -> &'static (RunLog, f64) {
    static RUN: OnceLock<(RunLog, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let log = run(&noise_free_config()).expect("noise-free run");
        (log, start.elapsed().as_secs_f64())
    })
}

/// The criterion-7 runs for seeds 1..=5, shared by criteria 7 and 8.
fn noisy_runs() -> &'static Vec<(u64, RunLog)> {
    static RUNS: OnceLock<Vec<(u64, RunLog)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        (1..=5)
            .map(|seed| (seed, run(&noisy_config(seed)).expect("noisy run")))
            .collect()
    })
}

#[test]
fn criterion_1_quadrature_order() {
    let start = Instant::now();
    let (tau1, tau2, t) = (0.5f64, 0.3f64, 1.0f64);
    // ∫_{t-τ₂}^{t} ∫_{λ-τ₁}^{λ} τ³ dτ dλ in closed form.
    let exact = (t.powi(5) - (t - tau1).powi(5) - (t - tau2).powi(5)
        + (t - tau1 - tau2).powi(5))
        / 20.0;
    let mut errors = Vec::new();
    for h in [2e-3, 1e-3, 5e-4] {
        let cfg = WindowConfig::new(tau1, tau2, 0.0, h).unwrap();
        let n = (t / h).round() as usize;
        let mut buf = SignalBuffer::new(h, n + 1);
        for k in 0..=n {
            let tk = k as f64 * h;
            buf.push(tk, VecN::from_slice(&[tk * tk * tk])).unwrap();
        }
        let approx = double_integral(&buf, t, &cfg).unwrap();
        errors.push((approx[0] - exact).abs());
    }
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(
            order >= 1.9,
            "measured order {order:.3} < 1.9 (errors {errors:?})"
        );
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 1.0, "quadrature study took {secs:.2} s (budget 1 s)");
    println!("criterion 1 (quadrature order >= 1.9): PASS");
}

#[test]
fn criterion_2_affine_identity() {
    // 5 s noise-free manipulator run with buffers recorded from the truth
    // state; the truth trajectory is integrated with RK4 so the identity
    // residual isolates the quadrature itself rather than integrator bias.
    let start = Instant::now();
    let arm = TwoLinkArm::default();
    let ctrl = PdGains::default();
    let h = 5e-4;
    let window = WindowConfig::new(0.5, 0.3, 0.0, h).unwrap();
    let theta = arm.theta_true().clone();
    let mut p = VecN::zeros(2);
    let mut q = VecN::from_slice(&[5.0, 5.0]);
    let mut pb = SignalBuffer::for_window(h, &window);
    let mut fb = SignalBuffer::for_window(h, &window);
    let mut gb = SignalBuffer::for_window(h, &window);
    let push = |t: f64,
                p: &VecN,
                q: &VecN,
                pb: &mut SignalBuffer<VecN>,
                fb: &mut SignalBuffer<VecN>,
                gb: &mut SignalBuffer<Mat>| {
        let u = tracking_torque(&arm, p, q, t, &ctrl);
        pb.push(t, p.clone()).unwrap();
        fb.push(t, arm.f0(p, q, &u)).unwrap();
        gb.push(t, arm.regressor(p, q, &u)).unwrap();
    };
    push(0.0, &p, &q, &mut pb, &mut fb, &mut gb);
    let rhs = |t: f64, p: &VecN, q: &VecN| -> (VecN, VecN) {
        let u = tracking_torque(&arm, p, q, t, &ctrl);
        (q.clone(), arm.truth_accel(p, q, &u))
    };
    let steps = (5.0 / h) as usize;
    let mut max_resid = 0.0f64;
    for k in 0..steps {
        let t = k as f64 * h;
        let (k1p, k1q) = rhs(t, &p, &q);
        let mut p2 = p.clone();
        p2.axpy(h / 2.0, &k1p).unwrap();
        let mut q2 = q.clone();
        q2.axpy(h / 2.0, &k1q).unwrap();
        let (k2p, k2q) = rhs(t + h / 2.0, &p2, &q2);
        let mut p3 = p.clone();
        p3.axpy(h / 2.0, &k2p).unwrap();
        let mut q3 = q.clone();
        q3.axpy(h / 2.0, &k2q).unwrap();
        let (k3p, k3q) = rhs(t + h / 2.0, &p3, &q3);
        let mut p4 = p.clone();
        p4.axpy(h, &k3p).unwrap();
        let mut q4 = q.clone();
        q4.axpy(h, &k3q).unwrap();
        let (k4p, k4q) = rhs(t + h, &p4, &q4);
        for (kp, kq, w) in [
            (&k1p, &k1q, h / 6.0),
            (&k2p, &k2q, h / 3.0),
            (&k3p, &k3q, h / 3.0),
            (&k4p, &k4q, h / 6.0),
        ] {
            p.axpy(w, kp).unwrap();
            q.axpy(w, kq).unwrap();
        }
        let tn = (k + 1) as f64 * h;
        push(tn, &p, &q, &mut pb, &mut fb, &mut gb);
        if (k + 1) % 100 == 0 && tn >= window.active_from() {
            let (pw, fw, gw) = compute_triplet(&pb, &fb, &gb, tn, &window).unwrap();
            let mut resid = pw;
            resid.axpy(-1.0, &fw).unwrap();
            resid.axpy(-1.0, &gw.tr_matvec(&theta).unwrap()).unwrap();
            max_resid = max_resid.max(resid.norm());
        }
    }
    assert!(
        max_resid <= 1e-4,
        "max ‖P − F − Gᵀθ‖ = {max_resid:.3e} > 1e-4"
    );
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "identity study took {secs:.2} s (budget 10 s)");
    println!("criterion 2 (affine identity <= 1e-4): PASS");
}

/// Small deterministic generator for the synthetic-stack criteria.
struct Lcg(u64);

impl Lcg {
    fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [-1, 1).
    fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

#[test]
fn criterion_3_batch_oracle_equivalence() {
    let mut rng = Lcg(0x9e3779b97f4a7c15);
    for case in 0..100 {
        let p_dim = rng.range(1, 8);
        let n_dim = rng.range(1, 3);
        let count = 2 * p_dim.div_ceil(n_dim) + 2;
        let theta_star = Mat::from_fn(p_dim, 1, |_, _| rng.uniform());
        let mut stack = HistoryStack::new(count, p_dim);
        for _ in 0..count {
            let g = Mat::from_fn(p_dim, n_dim, |_, _| rng.uniform());
            let f = VecN::from_slice(&(0..n_dim).map(|_| rng.uniform()).collect::<Vec<_>>());
            // Exact data: P = F̂ + Ĝᵀθ*.
            let mut p = f.clone();
            p.axpy(1.0, &g.tr_matvec(&theta_star.col(0)).unwrap())
                .unwrap();
            stack.try_insert(DataPoint::new(p, f, g, 0.0), 0.0).unwrap();
        }
        let smin = stack.smin();
        assert!(smin > 1e-6, "case {case}: synthetic stack lost rank");
        let batch = batch_least_squares(&stack).unwrap();

        // Integrate Eq. (19) with frozen stack, frozen Γ = I and β₁ = 0.
        let gains = EstimatorGains::new(1.0, 0.0);
        let mut state = EstimatorState::new(p_dim, 1.0);
        for i in 0..p_dim {
            state.theta_hat[(i, 0)] = rng.uniform();
        }
        let evs = cl_observer_core::numerics::sym_eigenvalues(stack.gram()).unwrap();
        let lam_max = evs.as_slice().iter().fold(0.0f64, |m, &v| m.max(v));
        let dt = 1.8 / lam_max;
        let mut converged = false;
        for _ in 0..500_000 {
            let td = theta_dot(&state, &stack, &gains).unwrap();
            state.theta_hat.axpy(dt, &td).unwrap();
            if state.theta_hat.sub(&batch).unwrap().frob_norm() <= 1e-8 {
                converged = true;
                break;
            }
        }
        let gap = state.theta_hat.sub(&batch).unwrap().frob_norm();
        assert!(
            converged && gap <= 1e-6,
            "case {case}: gradient flow ended {gap:.3e} from the batch solution"
        );

        // theta_dot vanishes at the batch solution.
        state.theta_hat = theta_star.clone();
        let td = theta_dot(&state, &stack, &gains).unwrap();
        assert!(
            td.frob_norm() <= 1e-10,
            "case {case}: ‖theta_dot‖ = {:.3e} at the solution",
            td.frob_norm()
        );
    }
    println!("criterion 3 (batch oracle equivalence, 100 stacks): PASS");
}

#[test]
fn criterion_4_scalar_riccati() {
    // p = n = 1, one point with Ĝ = 1 so 𝒢 = 1; β₁ = 0, k_θ = 1: the gain
    // ODE Γ' = -Γ² has Γ(t) = 1/(1 + t) from Γ(0) = 1.
    let mut stack = HistoryStack::new(1, 1);
    stack
        .try_insert(
            DataPoint::new(
                VecN::zeros(1),
                VecN::zeros(1),
                Mat::from_rows(&[&[1.0]]),
                0.0,
            ),
            0.0,
        )
        .unwrap();
    let gains = EstimatorGains::new(1.0, 0.0);
    let mut state = EstimatorState::new(1, 1.0);
    let dt = 1e-4;
    for _ in 0..10_000 {
        estimator_step(&mut state, &stack, &gains, dt).unwrap();
    }
    let gap = (state.gamma[(0, 0)] - 0.5).abs();
    assert!(gap <= 1e-3, "|Γ(1) − 1/2| = {gap:.3e} > 1e-3");
    println!("criterion 4 (scalar Riccati gain): PASS");
}

fn axis_point(axis: usize, scale: f64, t: f64) -> DataPoint {
    let mut g = Mat::zeros(2, 1);
    g[(axis, 0)] = scale;
    DataPoint::new(VecN::zeros(1), VecN::zeros(1), g, t)
}

#[test]
fn criterion_5_purging_state_machine() {
    // Hand-scripted walk through every branch: dead-time gate, not-full
    // append, full-rank floor, dwell gate, ξ·best gate, smax reject, smax
    // accept, and two purge swaps. Capacity 2, parameter dimension 2.
    let settings = PurgeSettings {
        dwell_time: 1.6,
        xi: 0.5,
        zeta: 0.0,
        window_deadtime: 0.8,
        c_lower: 0.1,
    };
    let mut ctl = PurgeController::new(HistoryStack::new(2, 2), 0.0, settings);
    let mut events = Vec::new();
    let script: &[(f64, usize, f64, bool)] = &[
        // (t, axis, scale, expect_purge)
        (0.5, 0, 1.0, false), // inside the initial dead time: ignored
        (1.0, 0, 1.0, false), // append; rank floor blocks the purge
        (1.5, 1, 1.0, false), // append to full rank; dwell blocks (1.5 < 1.6)
        (2.0, 0, 0.5, true),  // smax reject, then all gates clear: purge
        (2.5, 0, 1.0, false), // inside the post-purge dead time: ignored
        (3.0, 0, 1.0, false), // append; ξ·best gate blocks (0 < 0.5·1)
        (3.5, 1, 2.0, false), // append; dwell blocks (3.5 − 2.0 < 1.6)
        (4.0, 0, 3.0, true),  // smax accept improves s_min 1 → 4; purge
    ];
    for &(t, axis, scale, expect_purge) in script {
        let purged = ctl
            .tick(t, Some(axis_point(axis, scale, t)), &mut events)
            .unwrap();
        assert_eq!(purged, expect_purge, "unexpected purge outcome at t={t}");
    }
    let expected = vec![
        StackEvent::Inserted {
            t: 1.0,
            smin_before: 0.0,
            smin_after: 0.0,
        },
        StackEvent::Inserted {
            t: 1.5,
            smin_before: 0.0,
            smin_after: 1.0,
        },
        StackEvent::Rejected { t: 2.0, smin: 1.0 },
        StackEvent::Purged {
            t: 2.0,
            main_smin_before: 0.0,
            main_smin_after: 1.0,
        },
        StackEvent::Inserted {
            t: 3.0,
            smin_before: 0.0,
            smin_after: 0.0,
        },
        StackEvent::Inserted {
            t: 3.5,
            smin_before: 0.0,
            smin_after: 1.0,
        },
        StackEvent::Inserted {
            t: 4.0,
            smin_before: 1.0,
            smin_after: 4.0,
        },
        StackEvent::Purged {
            t: 4.0,
            main_smin_before: 1.0,
            main_smin_after: 4.0,
        },
    ];
    assert_eq!(events, expected, "event log differs from the derived script");

    // Fuzz: 10⁴ random candidates; the recording stack's s_min never
    // decreases within one stack generation, and the Gram cache stays honest.
    let settings = PurgeSettings {
        dwell_time: 0.5,
        xi: 0.9,
        zeta: 0.0,
        window_deadtime: 0.2,
        c_lower: 1e-3,
    };
    let mut ctl = PurgeController::new(HistoryStack::new(5, 3), 0.0, settings);
    let mut events = Vec::new();
    let mut rng = Lcg(42);
    let mut purges = 0usize;
    for k in 0..10_000 {
        let t = 0.1 * (k + 1) as f64;
        let g = Mat::from_fn(3, 2, |_, _| rng.uniform());
        let p = VecN::from_slice(&[rng.uniform(), rng.uniform()]);
        let f = VecN::from_slice(&[rng.uniform(), rng.uniform()]);
        let before = ctl.transient().smin();
        let purged = ctl.tick(t, Some(DataPoint::new(p, f, g, t)), &mut events).unwrap();
        if purged {
            purges += 1;
        } else {
            let after = ctl.transient().smin();
            assert!(
                after >= before - 1e-12,
                "s_min decreased {before:.6e} -> {after:.6e} at t={t}"
            );
        }
        if (k + 1) % 500 == 0 {
            let cached = ctl.transient().gram().clone();
            let fresh = ctl.transient().recompute_gram();
            let drift = cached.sub(&fresh).unwrap().frob_norm();
            assert!(drift <= 1e-9 * (1.0 + fresh.frob_norm()), "Gram cache drift {drift:.3e}");
        }
    }
    assert!(purges > 10, "fuzz produced only {purges} purges");
    println!("criterion 5 (purging state machine + fuzz): PASS");
}

#[test]
fn criterion_6_noise_free_end_to_end() {
    let (log, secs) = noise_free_run();
    let last = log.records.last().expect("records");
    let ratio = last.theta_err / THETA_TRUE_NORM;
    assert!(
        ratio <= 0.05,
        "final ‖θ̃‖/‖θ‖ = {ratio:.4} > 0.05 (θ̃ = {:.4})",
        last.theta_err
    );
    assert!(last.x_err <= 0.05, "final ‖x̃‖ = {:.4} > 0.05", last.x_err);
    assert!(
        log.purge_count >= 2,
        "only {} purge events (need >= 2)",
        log.purge_count
    );
    assert!(*secs < 60.0, "run took {secs:.1} s (budget 60 s)");
    println!(
        "criterion 6 (noise-free 30 s: ratio {ratio:.4}, x_err {:.4}, {} purges): PASS",
        last.x_err, log.purge_count
    );
}

#[test]
fn criterion_7_noisy_end_to_end() {
    let mut worst = 0.0f64;
    for (seed, log) in noisy_runs() {
        for r in &log.records {
            assert!(
                r.x_err.is_finite() && r.theta_err.is_finite(),
                "seed {seed}: non-finite error at t={}",
                r.t
            );
        }
        let last = log.records.last().expect("records");
        let ratio = last.theta_err / THETA_TRUE_NORM;
        assert!(
            ratio <= 0.25,
            "seed {seed}: final ‖θ̃‖/‖θ‖ = {ratio:.4} > 0.25"
        );
        worst = worst.max(ratio);
    }
    println!("criterion 7 (noisy 30 s, seeds 1..5, worst ratio {worst:.4}): PASS");
}

#[test]
fn criterion_8_gamma_bounds() {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let (noise_free, _) = noise_free_run();
    let mut logs: Vec<&RunLog> = vec![noise_free];
    logs.extend(noisy_runs().iter().map(|(_, log)| log));
    for log in logs {
        for r in &log.records {
            assert!(
                r.gamma_eig_min > 0.0,
                "Γ lost positive definiteness at t={}: λ_min = {:.3e}",
                r.t,
                r.gamma_eig_min
            );
            lo = lo.min(r.gamma_eig_min);
            hi = hi.max(r.gamma_eig_max);
        }
    }
    assert!(lo > 0.0 && hi.is_finite());
    println!("criterion 8 (Γ spectrum within [{lo:.3e}, {hi:.3e}], Γ̲ > 0): PASS");
}

#[test]
fn criterion_9_determinism() {
    let (first, _) = noise_free_run();
    let second = run(&noise_free_config()).expect("repeat run");
    assert_eq!(
        trajectory_csv(first),
        trajectory_csv(&second),
        "trajectory bytes differ between identical runs"
    );
    assert_eq!(events_csv(first), events_csv(&second));
    assert_eq!(first.meta, second.meta);
    println!("criterion 9 (byte-identical repeat run): PASS");
}
