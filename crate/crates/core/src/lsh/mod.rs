//! Locality-sensitive hashing: bit sampling, sign random projections,
//! cross-polytope and p-stable families, multi-table indexes answering
//! point location in equal balls, and the binary-search reduction from that
//! decision problem to approximate nearest neighbor search.

mod approx;
mod family;
mod index;
mod params;

pub use approx::{approx_nn, estimate_aspect, mips_hash_index, ApproxNn, ApproxNnConfig, AspectEstimate, MipsLsh};
pub use family::{
    bit_sampling_collision, fwht, hyperplane_collision, integrate, pstable_collision, FamilyKind, HashFamily,
    HashFunction,
};
pub use index::{LshIndex, PlebAnswer};
pub use params::{derive_params, LshParams};
