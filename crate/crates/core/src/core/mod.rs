//! Vector types, distance kinds, the exhaustive oracle and evaluation metrics.

mod distance;
mod error;
mod metrics;
mod oracle;
mod topk;
mod vector;

pub use distance::{dot, l2_sq, norm_sq, sparse_dense_dot, sparse_dot, DistanceKind};
pub(crate) use error::invalid;
pub use error::{Error, Result};
pub use metrics::{epsilon_valid, recall};
pub use oracle::{brute_force_topk, ground_truth, rescore};
pub use topk::{Neighbor, TopK, TopKResult};
pub use vector::{Collection, DenseVector, SparseVector, Vector, VectorRef};
