use std::time::Instant;

use rayon::prelude::*;

use super::report::{num, ExperimentReport};
use crate::core::{ground_truth, invalid, recall, Collection, DistanceKind, Result, TopKResult};
use crate::graph::{build_vamana, greedy_search, VamanaConfig};
use crate::ivf::{IvfIndex, KMeansKind};
use crate::lsh::{FamilyKind, HashFamily, LshIndex};
use crate::sampling::WedgeIndex;
use crate::trees::{RpForest, SplitRule};

/// Index family and its fixed parameters; the swept parameter is noted per variant.
#[derive(Clone, Debug, PartialEq)]
pub enum BenchFamily {
    /// Sweeps ℓ, the number of probed clusters.
    Ivf { clusters: Option<usize>, clustering: KMeansKind },
    /// Sweeps the search beam width.
    Vamana { max_degree: usize, alpha: f64 },
    /// Sweeps the number of trees.
    Rp { leaf_size: usize },
    /// Sweeps the number of tables L.
    Lsh { hash: FamilyKind, hash_len: usize },
    /// Sweeps the sample budget S.
    Wedge { k_prime: Option<usize> },
}

impl BenchFamily {
    fn name(&self) -> &'static str {
        match self {
            BenchFamily::Ivf { .. } => "ivf",
            BenchFamily::Vamana { .. } => "vamana",
            BenchFamily::Rp { .. } => "rp",
            BenchFamily::Lsh { .. } => "lsh",
            BenchFamily::Wedge { .. } => "wedge",
        }
    }

    fn param(&self) -> &'static str {
        match self {
            BenchFamily::Ivf { .. } => "ell",
            BenchFamily::Vamana { .. } => "beam",
            BenchFamily::Rp { .. } => "trees",
            BenchFamily::Lsh { .. } => "tables",
            BenchFamily::Wedge { .. } => "samples",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub family: BenchFamily,
    pub kind: DistanceKind,
    pub k: usize,
    pub sweep: Vec<usize>,
    pub seed: u64,
    /// Record wall time; off gives byte-stable output.
    pub timing: bool,
}

/// One row per sweep value: recall@k against the oracle, mean distance
/// evaluations per query, and wall time in milliseconds.
pub fn benchmark(config: &BenchConfig, x: &Collection, queries: &Collection) -> Result<ExperimentReport> {
    if config.sweep.is_empty() || config.k == 0 {
        return invalid("need a non-empty sweep and k ≥ 1");
    }
    let truth = ground_truth(x, queries, config.k, config.kind)?;
    let mut report = ExperimentReport::new(["family", "param", "value", "recall", "distance_evals", "wall_ms"]);
    let k = config.k;

    // Indexes that do not depend on the swept value are built once.
    let ivf = match &config.family {
        BenchFamily::Ivf { clusters, clustering } => {
            Some(IvfIndex::build(x, *clusters, config.kind, *clustering, 25, config.seed)?)
        }
        _ => None,
    };
    let graph = match &config.family {
        BenchFamily::Vamana { max_degree, alpha } => {
            Some(build_vamana(x, VamanaConfig::new(*alpha, *max_degree, config.seed), config.kind)?)
        }
        _ => None,
    };
    let wedge = match &config.family {
        BenchFamily::Wedge { .. } => Some(WedgeIndex::build(x)?),
        _ => None,
    };

    for &value in &config.sweep {
        let start = Instant::now();
        let per_query: Vec<(TopKResult, usize)> = match &config.family {
            BenchFamily::Ivf { .. } => {
                let ivf = ivf.as_ref().unwrap();
                let c = ivf.num_clusters();
                run(queries, |q| ivf.search(x, q, k, value.clamp(1, c)).map(|a| (a.result, a.scanned + c)))?
            }
            BenchFamily::Vamana { .. } => {
                let g = graph.as_ref().unwrap();
                run(queries, |q| greedy_search(g, x, q, k, g.entry(), value.max(k)).map(|(r, t)| (r, t.visited)))?
            }
            BenchFamily::Rp { leaf_size } => {
                let forest = RpForest::build(x, *leaf_size, SplitRule::RandomFractile, value.max(1), config.seed)?;
                run(queries, |q| forest.search(q, k).map(|r| (r, forest.candidates(q).len())))?
            }
            BenchFamily::Lsh { hash, hash_len } => {
                let family = HashFamily::new(*hash, config.seed, x.dim())?;
                let index = LshIndex::build(x, family, *hash_len, value.max(1))?;
                run(queries, |q| index.search(q, k, config.kind).map(|r| (r, index.candidates(q).len())))?
            }
            BenchFamily::Wedge { k_prime } => {
                let w = wedge.as_ref().unwrap();
                let rescored = k_prime.unwrap_or((10 * k).max(50)).min(x.len());
                let indexed: Vec<(usize, &[f32])> = queries.rows().enumerate().collect();
                indexed
                    .par_iter()
                    .map(|&(i, q)| {
                        let seed = config.seed.wrapping_add(i as u64);
                        w.search(x, q, value.max(1), k, *k_prime, seed).map(|a| (a.result, rescored))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let n = per_query.len() as f64;
        let mean_recall = per_query.iter().zip(&truth).map(|((r, _), t)| recall(t, r, k)).sum::<f64>() / n;
        let evals = per_query.iter().map(|p| p.1 as f64).sum::<f64>() / n;
        report.push(vec![
            config.family.name().into(),
            config.family.param().into(),
            value.to_string(),
            num(mean_recall),
            num(evals),
            if config.timing { num(elapsed) } else { num(0.0) },
        ]);
    }
    Ok(report)
}

/// Runs queries in parallel; results come back in query-id order.
fn run<F>(queries: &Collection, f: F) -> Result<Vec<(TopKResult, usize)>>
where
    F: Fn(&[f32]) -> Result<(TopKResult, usize)> + Sync,
{
    let rows: Vec<&[f32]> = queries.rows().collect();
    rows.par_iter().map(|q| f(q)).collect()
}
