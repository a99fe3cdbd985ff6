//! Simultaneous state and parameter estimation for second-order nonlinear
//! systems of the form `p' = q`, `q' = f0(x, u) + g(x, u)`, `y = p`, where
//! only the generalized position `p` and the input `u` are measured.
//!
//! The crate provides:
//!
//! * [`numerics`] -- small dense matrix/vector kernels (Jacobi eigenvalues,
//!   SPD solves) sized for a handful of states and parameters,
//! * [`windows`] -- timed ring buffers and the windowed position delta /
//!   iterated trapezoidal double integral that build regression data from
//!   position and input samples alone,
//! * [`observer`] -- the output-feedback velocity estimator and its
//!   position-only filter signal,
//! * [`history`] -- fixed-capacity history stacks with singular-value
//!   maximization insertion and dwell-time purging,
//! * [`estimator`] -- the concurrent-learning parameter update law, the
//!   least-squares gain dynamics, and a batch least-squares oracle,
//! * [`plant`] -- the plant abstraction plus a two-link manipulator with
//!   static-plus-viscous joint friction as the shipped instance,
//! * [`noise`] -- a seeded Gaussian measurement-noise stream.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion
//! simulation crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod estimator;
pub mod history;
pub mod noise;
pub mod numerics;
pub mod observer;
pub mod plant;
pub mod windows;

pub use numerics::{Mat, VecN};
