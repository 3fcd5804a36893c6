//! Branch-and-bound and randomized partition trees.
//!
//! [`KdTree`] answers exact k-NN by backtracking. [`RpForest`] holds random
//! projection trees or spill trees searched defeatistically, one leaf per
//! tree. [`CoverTree`] supports exact and (1 + ε)-approximate search with
//! radii in unsquared Euclidean distance.

mod cover;
mod kd;
mod rp;

pub use cover::{CoverTrace, CoverTree};
pub use kd::{KdNode, KdTree};
pub use rp::{
    defeatist_search, potential_phi, rp_build, spill_build, RpForest, RpNode, RpTree, SpillForest, SplitRule,
};
