//! Causal direction inference for two observed variables by comparing
//! regression errors in both directions, with synthetic benchmark
//! generation, an IGCI baseline, a benchmark harness and numerical checks
//! of the small-noise error asymmetry.

// guards such as `!(x > 0.0)` are written so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod igci;
pub mod infer;
pub mod preprocess;
pub mod regress;
pub mod seed;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
