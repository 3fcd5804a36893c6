//! Vector retrieval toolkit: exact search, trees, hashing, graphs, clustering,
//! sampling, quantization and sketches, each checked against a brute-force oracle.

pub mod core;
pub mod graph;
pub mod harness;
pub mod ivf;
pub mod lsh;
pub mod quant;
pub mod sampling;
pub mod sketch;
pub mod transforms;
pub mod trees;
pub mod util;

pub use crate::core::{
    brute_force_topk, epsilon_valid, recall, Collection, DenseVector, DistanceKind, Error, Neighbor, Result,
    SparseVector, TopKResult, Vector,
};
