//! Sketches that compress vectors while preserving inner-product information:
//! a Rademacher JL projection, the asymmetric max/min bucket sketch and
//! threshold sampling.

mod asym;
mod jl;
mod threshold;

pub use asym::{asym_sketch, asym_upper_bound, AsymSketch, AsymSketcher};
pub use jl::{jl_ip_estimate, jl_variance, JlSketcher};
pub use threshold::{threshold_ip_estimate, threshold_sketch, threshold_variance_bound, ThresholdSketch};
