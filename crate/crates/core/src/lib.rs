// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod container;
pub mod dataset;
pub mod experiment;
pub mod pipeline;
pub mod planner;
pub mod polygon;
pub mod sampler;
pub mod se3;
pub mod sfc;
pub mod spill;
pub mod timeparam;
pub mod validate;
