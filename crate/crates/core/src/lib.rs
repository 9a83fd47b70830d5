//! Baseband simulation of full-duplex OFDM self-interference cancellation
//! with an auxiliary receiver chain.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cancellation;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod impairments;
pub mod metrics;
pub mod ofdm;
pub mod rng;
pub mod scenario;
pub mod signal;
pub mod sim;
pub mod transceiver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
