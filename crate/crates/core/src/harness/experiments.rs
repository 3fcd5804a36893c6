use rayon::prelude::*;

use super::data::{generate, SyntheticSpec};
use super::report::{num, ExperimentReport};
use crate::core::{dot, l2_sq, Result};
use crate::util::{permutation, rng};

/// For each d, uses data points as MIPS queries over X and reports the
/// fraction that are their own maximizer. `sample_queries` limits the number
/// of query points (a seeded subset); None uses every point.
pub fn experiment_coincidence(
    spec: &SyntheticSpec,
    dims: &[usize],
    sample_queries: Option<usize>,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(["distribution", "m", "d", "queries", "fraction"]);
    for &d in dims {
        let x = generate(&SyntheticSpec { d, ..*spec })?;
        let m = x.len();
        let queries: Vec<u32> = match sample_queries {
            Some(s) if s < m => {
                let mut p = permutation(&mut rng(spec.seed ^ 0xc0de), m);
                p.truncate(s);
                p.sort_unstable();
                p
            }
            _ => (0..m as u32).collect(),
        };
        let hits = queries
            .par_iter()
            .filter(|&&i| {
                let u = x.row(i as usize);
                let own = dot(u, u);
                x.rows().enumerate().all(|(j, v)| j == i as usize || dot(u, v) <= own)
            })
            .count();
        report.push(vec![
            spec.distribution.name().into(),
            m.to_string(),
            d.to_string(),
            queries.len().to_string(),
            num(hits as f64 / queries.len() as f64),
        ]);
    }
    Ok(report)
}

/// For each d, draws independent queries and reports the mean and standard
/// deviation of the farthest-to-nearest Euclidean distance ratio over X, plus
/// the mean fraction of X within (1 + cover_eps) of the nearest distance.
pub fn experiment_instability(
    spec: &SyntheticSpec,
    dims: &[usize],
    n_queries: usize,
    cover_eps: f64,
) -> Result<ExperimentReport> {
    let mut report =
        ExperimentReport::new(["distribution", "m", "d", "queries", "ratio_mean", "ratio_sd", "cover_fraction"]);
    for &d in dims {
        let x = generate(&SyntheticSpec { d, ..*spec })?;
        let q = generate(&SyntheticSpec { m: n_queries, d, seed: spec.seed ^ 0x9e37_79b9, ..*spec })?;
        let per_query: Vec<(f64, f64)> = (0..n_queries)
            .into_par_iter()
            .map(|i| {
                let qi = q.row(i);
                let dist: Vec<f64> = x.rows().map(|u| l2_sq(qi, u).sqrt()).collect();
                let lo = dist.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = dist.iter().copied().fold(0.0, f64::max);
                let ratio = match (lo > 0.0, hi > 0.0) {
                    (true, _) => hi / lo,
                    (false, false) => 1.0,
                    (false, true) => f64::INFINITY,
                };
                let covered = dist.iter().filter(|&&v| v <= (1.0 + cover_eps) * lo).count();
                (ratio, covered as f64 / dist.len() as f64)
            })
            .collect();
        let n = per_query.len() as f64;
        let mean = per_query.iter().map(|p| p.0).sum::<f64>() / n;
        let sd = if per_query.len() > 1 {
            (per_query.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let cover = per_query.iter().map(|p| p.1).sum::<f64>() / n;
        report.push(vec![
            spec.distribution.name().into(),
            x.len().to_string(),
            d.to_string(),
            n_queries.to_string(),
            num(mean),
            num(sd),
            num(cover),
        ]);
    }
    Ok(report)
}
