//! Plant abstraction for second-order systems `p' = q`, `q' = f0 + g`,
//! `y = p`, and the shipped two-link manipulator instance.
//!
//! The manipulator's uncertainty is joint-wise static-plus-viscous friction
//! mapped through the inverse mass matrix:
//! `g = -M(p)⁻¹ · Y(q) · θ` with
//! `Y(q) = [[tanh q₁, q₁, 0, 0], [0, 0, tanh q₂, q₂]]`,
//! so the regressor is `Σ(x, u) = -(M(p)⁻¹ Y(q))ᵀ` and `g = Σᵀθ` holds
//! exactly (zero approximation error). A computed-torque PD tracking
//! controller is included as plumbing; it may use full truth knowledge.

use crate::numerics::{Mat, VecN};

/// A second-order plant exposed to the estimation stack: the known dynamics
/// `f0`, the regressor `Σ` with `g = Σᵀθ`, and the true parameters (used by
/// the simulation truth and test oracles only).
pub trait SecondOrderPlant {
    /// Generalized coordinate count n.
    fn dof(&self) -> usize;
    /// Input dimension m.
    fn input_dim(&self) -> usize;
    /// Parameter count p.
    fn param_count(&self) -> usize;
    fn f0(&self, p: &VecN, q: &VecN, u: &VecN) -> VecN;
    /// Regressor Σ(x, u), p×n.
    fn regressor(&self, p: &VecN, q: &VecN, u: &VecN) -> Mat;
    /// True parameter vector θ (p×1).
    fn theta_true(&self) -> &VecN;

    /// Truth acceleration `f0 + Σᵀθ`; definitionally exact for the shipped
    /// plant.
    fn truth_accel(&self, p: &VecN, q: &VecN, u: &VecN) -> VecN {
        let mut accel = self.f0(p, q, u);
        let g = self
            .regressor(p, q, u)
            .tr_matvec(self.theta_true())
            .expect("plant dimensions are consistent");
        accel.axpy(1.0, &g).expect("plant dimensions are consistent");
        accel
    }
}

/// Inertia constants and friction parameters of the two-link arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// (static₁, viscous₁, static₂, viscous₂) friction parameters.
    pub theta: VecN,
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            a1: 3.473,
            a2: 0.196,
            a3: 0.242,
            theta: VecN::from_slice(&[5.3, 1.1, 8.45, 2.35]),
        }
    }
}

/// Mass matrix `M(p) = [[a₁+2a₃c₂, a₂+a₃c₂], [a₂+a₃c₂, a₂]]`, `c₂ = cos p₂`.
pub fn manipulator_mass(p: &VecN, params: &ManipulatorParams) -> Mat {
    let c2 = libm::cos(p[1]);
    let off = params.a2 + params.a3 * c2;
    Mat::from_rows(&[
        &[params.a1 + 2.0 * params.a3 * c2, off],
        &[off, params.a2],
    ])
}

/// Coriolis matrix `V_m(p, q)`, `s₂ = sin p₂`.
pub fn manipulator_coriolis(p: &VecN, q: &VecN, params: &ManipulatorParams) -> Mat {
    let s2 = libm::sin(p[1]);
    let a3s2 = params.a3 * s2;
    Mat::from_rows(&[
        &[-a3s2 * q[1], -a3s2 * (q[0] + q[1])],
        &[a3s2 * q[0], 0.0],
    ])
}

/// Friction basis `Y(q) = [[tanh q₁, q₁, 0, 0], [0, 0, tanh q₂, q₂]]` (2×4).
pub fn friction_basis(q: &VecN) -> Mat {
    Mat::from_rows(&[
        &[libm::tanh(q[0]), q[0], 0.0, 0.0],
        &[0.0, 0.0, libm::tanh(q[1]), q[1]],
    ])
}

fn invert_2x2(m: &Mat) -> Mat {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    assert!(det.abs() > 1e-12, "mass matrix singular");
    Mat::from_rows(&[
        &[m[(1, 1)] / det, -m[(0, 1)] / det],
        &[-m[(1, 0)] / det, m[(0, 0)] / det],
    ])
}

/// The two-link manipulator of the case study.
#[derive(Debug, Clone, Default)]
pub struct TwoLinkArm {
    pub params: ManipulatorParams,
}

impl TwoLinkArm {
    pub fn new(params: ManipulatorParams) -> Self {
        Self { params }
    }

    fn mass_inverse(&self, p: &VecN) -> Mat {
        invert_2x2(&manipulator_mass(p, &self.params))
    }
}

impl SecondOrderPlant for TwoLinkArm {
    fn dof(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        4
    }

    /// `f0 = -M⁻¹ V_m q + M⁻¹ u`.
    fn f0(&self, p: &VecN, q: &VecN, u: &VecN) -> VecN {
        let m_inv = self.mass_inverse(p);
        let vm = manipulator_coriolis(p, q, &self.params);
        let mut rhs = u.clone();
        rhs.axpy(-1.0, &vm.matvec(q).expect("2x2")).expect("2x2");
        m_inv.matvec(&rhs).expect("2x2")
    }

    /// `Σ = -(M⁻¹ Y(q))ᵀ` (4×2).
    fn regressor(&self, p: &VecN, q: &VecN, _u: &VecN) -> Mat {
        let m_inv = self.mass_inverse(p);
        m_inv
            .matmul(&friction_basis(q))
            .expect("2x4")
            .transpose()
            .scale(-1.0)
    }

    fn theta_true(&self) -> &VecN {
        &self.params.theta
    }
}

/// Reference trajectory `p_d,i(t) = sin 3t + sin 2t` for both joints.
pub fn reference_position(t: f64) -> VecN {
    let v = libm::sin(3.0 * t) + libm::sin(2.0 * t);
    VecN::from_slice(&[v, v])
}

pub fn reference_velocity(t: f64) -> VecN {
    let v = 3.0 * libm::cos(3.0 * t) + 2.0 * libm::cos(2.0 * t);
    VecN::from_slice(&[v, v])
}

pub fn reference_accel(t: f64) -> VecN {
    let v = -9.0 * libm::sin(3.0 * t) - 4.0 * libm::sin(2.0 * t);
    VecN::from_slice(&[v, v])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp: 100.0, kd: 20.0 }
    }
}

/// Computed-torque tracking controller,
/// `u = M(p)(q̈_d + K_d(q_d - q) + K_p(p_d - p)) + V_m q + Y(q)θ`.
/// Plant-side code, so full truth knowledge (including θ) is allowed.
pub fn tracking_torque(
    arm: &TwoLinkArm,
    p: &VecN,
    q: &VecN,
    t: f64,
    gains: &PdGains,
) -> VecN {
    let mut v = reference_accel(t);
    let mut vel_err = reference_velocity(t);
    vel_err.axpy(-1.0, q).expect("2");
    let mut pos_err = reference_position(t);
    pos_err.axpy(-1.0, p).expect("2");
    v.axpy(gains.kd, &vel_err).expect("2");
    v.axpy(gains.kp, &pos_err).expect("2");

    let mut u = manipulator_mass(p, &arm.params).matvec(&v).expect("2x2");
    u.axpy(
        1.0,
        &manipulator_coriolis(p, q, &arm.params).matvec(q).expect("2x2"),
    )
    .expect("2");
    u.axpy(
        1.0,
        &friction_basis(q).matvec(&arm.params.theta).expect("2x4"),
    )
    .expect("2");
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm() -> TwoLinkArm {
        TwoLinkArm::default()
    }

    #[test]
    fn mass_matrix_at_zero_angle() {
        let m = manipulator_mass(&VecN::from_slice(&[0.3, 0.0]), &arm().params);
        assert!((m[(0, 0)] - 3.957).abs() < 1e-12);
        assert!((m[(0, 1)] - 0.438).abs() < 1e-12);
        assert!((m[(1, 0)] - 0.438).abs() < 1e-12);
        assert!((m[(1, 1)] - 0.196).abs() < 1e-12);
    }

    #[test]
    fn mass_matrix_at_right_angle() {
        let m = manipulator_mass(
            &VecN::from_slice(&[0.0, core::f64::consts::FRAC_PI_2]),
            &arm().params,
        );
        assert!((m[(0, 0)] - 3.473).abs() < 1e-12);
        assert!((m[(0, 1)] - 0.196).abs() < 1e-12);
        assert!((m[(1, 1)] - 0.196).abs() < 1e-12);
    }

    #[test]
    fn mass_matrix_symmetric_and_pd() {
        for i in 0..50 {
            let p2 = i as f64 * 0.37 - 8.0;
            let p = VecN::from_slice(&[0.0, p2]);
            let m = manipulator_mass(&p, &arm().params);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
            let evs = crate::numerics::sym_eigenvalues(&m).unwrap();
            for &ev in evs.as_slice() {
                assert!(ev > 0.05 && ev < 4.5, "eigenvalue {ev} at p2={p2}");
            }
        }
    }

    #[test]
    fn coriolis_zero_velocity() {
        let vm = manipulator_coriolis(
            &VecN::from_slice(&[0.1, 0.7]),
            &VecN::zeros(2),
            &arm().params,
        );
        assert_eq!(vm, Mat::zeros(2, 2));
    }

    #[test]
    fn coriolis_zero_angle() {
        let vm = manipulator_coriolis(
            &VecN::from_slice(&[0.1, 0.0]),
            &VecN::from_slice(&[1.0, -2.0]),
            &arm().params,
        );
        assert_eq!(vm, Mat::zeros(2, 2));
    }

    #[test]
    fn coriolis_hand_value() {
        // p₂ = π/2, q = (1,1)ᵀ → [[−0.242, −0.484], [0.242, 0]].
        let vm = manipulator_coriolis(
            &VecN::from_slice(&[0.0, core::f64::consts::FRAC_PI_2]),
            &VecN::from_slice(&[1.0, 1.0]),
            &arm().params,
        );
        assert!((vm[(0, 0)] + 0.242).abs() < 1e-12);
        assert!((vm[(0, 1)] + 0.484).abs() < 1e-12);
        assert!((vm[(1, 0)] - 0.242).abs() < 1e-12);
        assert_eq!(vm[(1, 1)], 0.0);
    }

    #[test]
    fn regressor_zero_at_rest() {
        let a = arm();
        let sigma = a.regressor(
            &VecN::from_slice(&[0.4, -1.2]),
            &VecN::zeros(2),
            &VecN::zeros(2),
        );
        assert_eq!(sigma, Mat::zeros(4, 2));
    }

    #[test]
    fn truth_decomposition_is_exact() {
        // f0 + Σᵀθ must equal M⁻¹(u − V_m q − Y θ) to rounding.
        let a = arm();
        let p = VecN::from_slice(&[0.3, -0.9]);
        let q = VecN::from_slice(&[1.4, -0.6]);
        let u = VecN::from_slice(&[2.0, -1.0]);
        let lhs = a.truth_accel(&p, &q, &u);

        let m_inv = invert_2x2(&manipulator_mass(&p, &a.params));
        let mut rhs = u.clone();
        rhs.axpy(-1.0, &manipulator_coriolis(&p, &q, &a.params).matvec(&q).unwrap())
            .unwrap();
        rhs.axpy(-1.0, &friction_basis(&q).matvec(&a.params.theta).unwrap())
            .unwrap();
        let rhs = m_inv.matvec(&rhs).unwrap();
        for i in 0..2 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn skew_symmetry_of_mdot_minus_2vm() {
        // d/dt M − 2V_m is skew for this standard model; check qᵀ(Ṁ−2V_m)q = 0.
        let params = arm().params;
        for i in 0..20 {
            let p2 = i as f64 * 0.31 - 3.0;
            let q = VecN::from_slice(&[(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()]);
            let p = VecN::from_slice(&[0.0, p2]);
            // Ṁ entries: d/dt cos(p₂) = −sin(p₂)·q₂.
            let s2 = libm::sin(p2);
            let dm = Mat::from_rows(&[
                &[-2.0 * params.a3 * s2 * q[1], -params.a3 * s2 * q[1]],
                &[-params.a3 * s2 * q[1], 0.0],
            ]);
            let vm = manipulator_coriolis(&p, &q, &params);
            let mut skew = dm.clone();
            skew.axpy(-2.0, &vm).unwrap();
            let quad = q.dot(&skew.matvec(&q).unwrap()).unwrap();
            assert!(quad.abs() < 1e-12, "quadratic form {quad}");
        }
    }

    #[test]
    fn feedforward_only_on_reference() {
        // On the reference with zero PD gains, the torque is pure feedforward.
        let a = arm();
        let t = 1.3;
        let p = reference_position(t);
        let q = reference_velocity(t);
        let u = tracking_torque(&a, &p, &q, t, &PdGains { kp: 0.0, kd: 0.0 });
        let mut expect = manipulator_mass(&p, &a.params)
            .matvec(&reference_accel(t))
            .unwrap();
        expect
            .axpy(1.0, &manipulator_coriolis(&p, &q, &a.params).matvec(&q).unwrap())
            .unwrap();
        expect
            .axpy(1.0, &friction_basis(&q).matvec(&a.params.theta).unwrap())
            .unwrap();
        for i in 0..2 {
            assert!((u[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_loop_tracks_reference() {
        let a = arm();
        let gains = PdGains::default();
        let dt = 5e-4;
        let mut p = VecN::zeros(2);
        let mut q = VecN::zeros(2);
        let mut max_u: f64 = 0.0;
        let mut max_err_after_2s: f64 = 0.0;
        for k in 0..(10.0 / dt) as usize {
            let t = k as f64 * dt;
            let u = tracking_torque(&a, &p, &q, t, &gains);
            max_u = max_u.max(u.norm());
            let accel = a.truth_accel(&p, &q, &u);
            p.axpy(dt, &q).unwrap();
            q.axpy(dt, &accel).unwrap();
            if t > 2.0 {
                let err = reference_position(t).sub(&p).unwrap().norm();
                max_err_after_2s = max_err_after_2s.max(err);
            }
        }
        assert!(max_err_after_2s < 0.05, "tracking error {max_err_after_2s}");
        assert!(max_u.is_finite() && max_u < 1e3, "torque bound {max_u}");
    }

    #[test]
    fn regressor_identifiable_along_reference() {
        // Gram of Σ samples along one reference period has full rank 4.
        let a = arm();
        let mut gram = Mat::zeros(4, 4);
        let steps = 400;
        for k in 0..steps {
            let t = k as f64 * (2.0 * core::f64::consts::PI) / steps as f64;
            let sigma = a.regressor(
                &reference_position(t),
                &reference_velocity(t),
                &VecN::zeros(2),
            );
            gram.add_outer(1.0, &sigma).unwrap();
        }
        let smin = crate::numerics::min_singular_value(&gram.symmetrized().unwrap()).unwrap();
        assert!(smin > 1e-3, "reference not exciting: s_min {smin}");
    }
}
