//! Iterative receivers for coded transmission over ISI channels impaired by
//! Wiener phase noise.
//!
//! Two receivers share one equalizer/decoder loop and differ only in how the
//! phase trajectory is estimated:
//!
//! * [`receiver::ReceiverKind::BpMfEp`] treats the nonlinear observation
//!   factor with mean-field messages and Gaussianizes the phase message with
//!   a second-order Taylor expansion, then smooths it with Gaussian belief
//!   propagation over the random-walk chain.
//! * [`receiver::ReceiverKind::Eks`] runs a soft-input extended Kalman
//!   smoother that linearizes the observation model to first order.
//!
//! The symbol side is a Gaussian forward/backward recursion over the channel
//! shift-register state with expectation-propagation symbol priors, coupled to
//! a BCJR decoder for the (23,35)₈ convolutional code. The [`harness`] module
//! drives Monte-Carlo BER/MSE experiments and writes CSV tables.

// `!(x > 0.0)` also rejects NaN; index loops mirror the recursions.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod decoder;
pub mod equalizer;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod obs;
pub mod oracles;
pub mod pn;
pub mod receiver;
pub mod selftest;
pub mod tx;

pub use error::{Error, Result};
pub use num_complex::Complex64;
