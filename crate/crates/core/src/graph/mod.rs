//! Graph indexes searched by best-first traversal: exact k-NN graphs, exact
//! α-sparse neighborhood graphs, and the incremental Vamana construction.

mod build;
mod search;

pub use build::{
    build_alpha_sng_exact, build_knn_graph, build_vamana, check_alpha_reachability, medoid, robust_prune, Construction,
    NeighborGraph, VamanaConfig,
};
pub use search::{connectivity_check, greedy_search, greedy_search_printed, Connectivity, SearchTrace};
