#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod ratedist;
pub mod rng;
pub mod specfun;
pub mod sphere_code;
pub mod stats;

pub use error::{Error, Result};
