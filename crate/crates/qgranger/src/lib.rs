#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

//! Granger causality decisions from quantized observations of jointly
//! Gaussian stationary processes.
//!
//! The pipeline is: simulate or ingest series, quantize, estimate lagged
//! covariances, assemble a causality matrix and look at its smallest singular
//! value. Binary data admits an exact test through the arcsine law; finer
//! quantizers use perturbation bounds that give a sufficient condition only.

pub mod bounds;
pub mod causality;
pub mod cli;
pub mod error;
pub mod gausslink;
pub mod moments;
pub mod quantize;
pub mod signals;

pub use error::{Error, Result};
