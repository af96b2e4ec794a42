//! Age of Information distributions for single-buffer queues with
//! time-varying Poisson arrivals and probabilistic preemption.
//!
//! [`tv_solver`] gives `P(Δ(t) ≤ x)` at finite `t` under a time-varying rate,
//! [`stationary`] the steady state for a constant rate, [`simulator`] a
//! Monte-Carlo reference and [`optimizer`] rate plans under AoI constraints.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod quadrature;
pub mod simulator;
pub mod stationary;
pub mod tv_solver;
