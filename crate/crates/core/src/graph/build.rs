use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::greedy_search;
use crate::core::{invalid, Collection, DistanceKind, Error, Neighbor, Result, TopK};
use crate::util::{centroid, permutation, rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Construction {
    Explicit,
    Knn { k: usize },
    AlphaSng { alpha: f64 },
    Vamana { alpha: f64, max_degree: usize, beam: usize, seed: u64 },
}

/// Directed graph over collection ids with sorted out-neighbor lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<u32>>,
    entry: u32,
    kind: DistanceKind,
    directed: bool,
    construction: Construction,
}

impl NeighborGraph {
    /// Wraps an explicit adjacency, sorting and deduplicating each list.
    pub fn from_adjacency(mut adjacency: Vec<Vec<u32>>, entry: u32, kind: DistanceKind) -> Result<Self> {
        let m = adjacency.len();
        if entry as usize >= m {
            return invalid("entry outside the graph");
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.iter().any(|&v| v as usize >= m || v as usize == u) {
                return invalid(format!("node {u} has a self-loop or dangling edge"));
            }
        }
        let directed = is_asymmetric(&adjacency);
        Ok(Self { adjacency, entry, kind, directed, construction: Construction::Explicit })
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adjacency[u as usize]
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn entry(&self) -> u32 {
        self.entry
    }

    pub fn set_entry(&mut self, entry: u32) -> Result<()> {
        if entry as usize >= self.len() {
            return invalid("entry outside the graph");
        }
        self.entry = entry;
        Ok(())
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn max_out_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }
}

fn is_asymmetric(adjacency: &[Vec<u32>]) -> bool {
    adjacency
        .iter()
        .enumerate()
        .any(|(u, list)| list.iter().any(|&v| adjacency[v as usize].binary_search(&(u as u32)).is_err()))
}

/// Point closest to the centroid under the given kind.
pub fn medoid(x: &Collection, kind: DistanceKind) -> u32 {
    let c: Vec<f32> = centroid(x.rows(), x.dim()).into_iter().map(|v| v as f32).collect();
    let kind =
        if kind == DistanceKind::Angular && c.iter().all(|&v| v == 0.0) { DistanceKind::L2Squared } else { kind };
    (0..x.len()).map(|i| Neighbor::new(i as u32, kind.dense(&c, x.row(i)))).min().map_or(0, |n| n.id)
}

/// Distance used by the pruning rule: unsquared for L2 so it satisfies the triangle inequality.
#[inline]
fn prune_distance(kind: DistanceKind, u: &[f32], v: &[f32]) -> f64 {
    match kind {
        DistanceKind::L2Squared => kind.dense(u, v).sqrt(),
        other => other.dense(u, v),
    }
}

fn check_prunable(kind: DistanceKind) -> Result<()> {
    match kind {
        DistanceKind::L2Squared | DistanceKind::Angular => Ok(()),
        other => Err(Error::InvalidParameter(format!("pruning needs a metric kind, got {other:?}"))),
    }
}

/// Keeps the nearest remaining candidate v and discards every w with
/// δ(u, w) > α δ(w, v), until `max_degree` are kept or none remain.
pub fn robust_prune(
    u: u32,
    candidates: &[u32],
    alpha: f64,
    max_degree: usize,
    x: &Collection,
    kind: DistanceKind,
) -> Result<Vec<u32>> {
    if alpha < 1.0 {
        return invalid("alpha must be at least 1");
    }
    check_prunable(kind)?;
    let pu = x.row(u as usize);
    let mut pool: Vec<Neighbor> = candidates
        .iter()
        .filter(|&&c| c != u)
        .map(|&c| Neighbor::new(c, prune_distance(kind, pu, x.row(c as usize))))
        .collect();
    pool.sort_unstable();
    pool.dedup_by_key(|n| n.id);
    Ok(prune_sorted(pool, alpha, max_degree, x, kind))
}

fn prune_sorted(
    mut pool: Vec<Neighbor>,
    alpha: f64,
    max_degree: usize,
    x: &Collection,
    kind: DistanceKind,
) -> Vec<u32> {
    let mut kept = Vec::new();
    while !pool.is_empty() && kept.len() < max_degree {
        let v = pool.remove(0);
        kept.push(v.id);
        let pv = x.row(v.id as usize);
        pool.retain(|w| w.score <= alpha * prune_distance(kind, x.row(w.id as usize), pv));
    }
    kept.sort_unstable();
    kept
}

/// Each node linked to its k nearest other nodes, by exhaustive scan.
pub fn build_knn_graph(x: &Collection, k: usize, kind: DistanceKind) -> Result<NeighborGraph> {
    let m = x.len();
    if k == 0 || k >= m {
        return invalid(format!("k must lie in [1, {})", m));
    }
    let adjacency: Vec<Vec<u32>> = (0..m)
        .into_par_iter()
        .map(|u| {
            let mut top = TopK::new(k);
            let pu = x.row(u);
            for (v, row) in x.rows().enumerate() {
                if v != u {
                    top.push(Neighbor::new(v as u32, kind.dense(pu, row)));
                }
            }
            let mut ids = top.into_result().ids();
            ids.sort_unstable();
            ids
        })
        .collect();
    let directed = is_asymmetric(&adjacency);
    Ok(NeighborGraph { adjacency, entry: medoid(x, kind), kind, directed, construction: Construction::Knn { k } })
}

/// Exact α-SNG: prune every node against all others. Cubic in m.
pub fn build_alpha_sng_exact(x: &Collection, alpha: f64, kind: DistanceKind) -> Result<NeighborGraph> {
    if alpha < 1.0 {
        return invalid("alpha must be at least 1");
    }
    check_prunable(kind)?;
    let m = x.len();
    let all: Vec<u32> = (0..m as u32).collect();
    let adjacency = (0..m as u32)
        .into_par_iter()
        .map(|u| robust_prune(u, &all, alpha, usize::MAX, x, kind))
        .collect::<Result<Vec<_>>>()?;
    let directed = is_asymmetric(&adjacency);
    Ok(NeighborGraph {
        adjacency,
        entry: medoid(x, kind),
        kind,
        directed,
        construction: Construction::AlphaSng { alpha },
    })
}

/// Pairs (u, w) with no edge u→w and no neighbor v of u satisfying δ(u, w) ≥ α δ(w, v).
pub fn check_alpha_reachability(g: &NeighborGraph, x: &Collection, alpha: f64) -> Vec<(u32, u32)> {
    let kind = g.kind();
    let m = x.len() as u32;
    (0..m)
        .into_par_iter()
        .flat_map_iter(|u| {
            let nu = g.neighbors(u);
            let pu = x.row(u as usize);
            (0..m)
                .filter(move |&w| w != u && nu.binary_search(&w).is_err())
                .filter(move |&w| {
                    let pw = x.row(w as usize);
                    let duw = prune_distance(kind, pu, pw);
                    !nu.iter().any(|&v| duw >= alpha * prune_distance(kind, pw, x.row(v as usize)))
                })
                .map(move |w| (u, w))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VamanaConfig {
    pub alpha: f64,
    /// Out-degree cap R.
    pub max_degree: usize,
    /// Search list size used while building; defaults to 2R.
    pub beam: usize,
    pub seed: u64,
}

impl VamanaConfig {
    pub fn new(alpha: f64, max_degree: usize, seed: u64) -> Self {
        Self { alpha, max_degree, beam: 2 * max_degree, seed }
    }
}

/// Incremental α-SNG approximation: random R-regular start, then two passes
/// over a random order (α = 1, then the target α) of search, prune, and
/// reverse-edge insertion with re-pruning of overfull nodes.
pub fn build_vamana(x: &Collection, config: VamanaConfig, kind: DistanceKind) -> Result<NeighborGraph> {
    let m = x.len();
    let r = config.max_degree;
    if r == 0 || r >= m {
        return invalid(format!("R must lie in [1, {})", m));
    }
    if config.alpha < 1.0 || config.beam == 0 {
        return invalid("alpha must be at least 1 and beam positive");
    }
    check_prunable(kind)?;
    let mut rand = rng(config.seed);
    let adjacency: Vec<Vec<u32>> = (0..m as u32)
        .map(|u| {
            let mut picked = std::collections::BTreeSet::new();
            while picked.len() < r {
                let v = rand.random_range(0..m as u32);
                if v != u {
                    picked.insert(v);
                }
            }
            picked.into_iter().collect()
        })
        .collect();
    let entry = medoid(x, kind);
    let order = permutation(&mut rand, m);
    let mut g = NeighborGraph {
        adjacency,
        entry,
        kind,
        directed: true,
        construction: Construction::Vamana { alpha: config.alpha, max_degree: r, beam: config.beam, seed: config.seed },
    };
    for alpha in [1.0, config.alpha] {
        for &u in &order {
            let beam = config.beam.min(m);
            let (_, trace) = greedy_search(&g, x, x.row(u as usize), beam, entry, beam)?;
            let mut pool: Vec<u32> = trace.final_queue.iter().map(|n| n.id).collect();
            pool.extend_from_slice(&g.adjacency[u as usize]);
            let pruned = robust_prune(u, &pool, alpha, r, x, kind)?;
            g.adjacency[u as usize] = pruned.clone();
            for v in pruned {
                let list = &mut g.adjacency[v as usize];
                if let Err(pos) = list.binary_search(&u) {
                    list.insert(pos, u);
                    if list.len() > r {
                        let current = list.clone();
                        g.adjacency[v as usize] = robust_prune(v, &current, alpha, r, x, kind)?;
                    }
                }
            }
        }
    }
    Ok(g)
}
