//! Shared fixtures for the criterion benchmarks.

use annkit::core::Collection;
use annkit::harness::{generate, Distribution, SyntheticSpec};

pub fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
    generate(&SyntheticSpec::new(Distribution::GaussianStd, m, d, seed)).expect("valid synthetic spec")
}
