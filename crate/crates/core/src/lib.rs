//! ReLU network calculus, constructive Lipschitz interpolation networks,
//! closed-form error bounds and a minimum Monte Carlo trainer.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod bounds;
pub mod calculus;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod matrix;
pub mod net;
pub mod netfile;
pub mod rng;
pub mod stats;
pub mod target;
pub mod train;

pub use error::{Error, Result};
