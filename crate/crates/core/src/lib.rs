// Negated comparisons are deliberate: NaN must fail every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod gmc;
pub mod harness;
pub mod lqg;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{RngStream, StreamRng};
