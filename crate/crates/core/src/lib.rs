//! Kernel density estimation and independence testing for data living on a
//! sphere paired with a real-valued response.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bandwidth;
pub mod directional;
pub mod error;
pub mod independence;
pub mod kde;
pub mod numerics;
pub mod optimize;
pub mod rng;
pub mod simulation;
pub mod wildfire;

pub use error::{Error, Result};
