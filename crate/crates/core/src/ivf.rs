//! Clustering-based retrieval. Points are partitioned by KMeans (or spherical
//! KMeans for inner-product workloads); a query is routed to its ℓ best
//! centroids and scanned exhaustively within those clusters.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{dot, invalid, l2_sq, norm_sq, Collection, DistanceKind, Error, Neighbor, Result, TopK, TopKResult};
use crate::util::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KMeansKind {
    Euclidean,
    Spherical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub kind: KMeansKind,
    pub dim: usize,
    /// Row-major C × d.
    pub centroids: Vec<f32>,
    pub assignment: Vec<u32>,
    /// Objective after each Lloyd iteration: squared error, or Σ(1 − cos) for spherical.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

impl KMeansModel {
    pub fn num_clusters(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the best centroid for `u`, ties to the lower index.
    pub fn nearest(&self, u: &[f32]) -> u32 {
        let mut best = Neighbor::new(0, f64::INFINITY);
        for c in 0..self.num_clusters() {
            let n = Neighbor::new(c as u32, self.cost(u, self.centroid(c)));
            if n < best {
                best = n;
            }
        }
        best.id
    }

    fn cost(&self, u: &[f32], c: &[f32]) -> f64 {
        match self.kind {
            KMeansKind::Euclidean => l2_sq(u, c),
            KMeansKind::Spherical => 1.0 - dot(u, c) / norm_sq(u).sqrt(),
        }
    }
}

/// Lloyd iterations from k-means++ seeding until the assignment stops
/// changing or `max_iters` is reached.
pub fn kmeans_train(x: &Collection, c: usize, kind: KMeansKind, max_iters: usize, seed: u64) -> Result<KMeansModel> {
    let m = x.len();
    if c == 0 || c > m {
        return invalid(format!("cluster count must lie in [1, {m}]"));
    }
    let data = prepare(x, kind)?;
    let centroids = seed_plus_plus(&data, c, &|u, mu| cost(kind, u, mu), &mut rng(seed));
    Ok(lloyd(&data, centroids, kind, max_iters, x.dim()))
}

/// Lloyd iterations from the given row-major centroids.
pub fn kmeans_refine(x: &Collection, centroids: &[f32], kind: KMeansKind, max_iters: usize) -> Result<KMeansModel> {
    let d = x.dim();
    if centroids.is_empty() || !centroids.len().is_multiple_of(d) {
        return invalid("centroid block does not match the dimension");
    }
    let data = prepare(x, kind)?;
    let init = centroids.chunks(d).map(|c| c.iter().map(|&v| v as f64).collect()).collect();
    Ok(lloyd(&data, init, kind, max_iters, d))
}

fn prepare(x: &Collection, kind: KMeansKind) -> Result<Vec<Vec<f64>>> {
    if x.is_sparse() {
        return invalid("KMeans needs a dense collection");
    }
    x.rows()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|&a| a as f64).collect();
            match kind {
                KMeansKind::Euclidean => Ok(v),
                KMeansKind::Spherical => normalized(v).ok_or(Error::ZeroVector),
            }
        })
        .collect()
}

fn cost(kind: KMeansKind, u: &[f64], mu: &[f64]) -> f64 {
    match kind {
        KMeansKind::Euclidean => u.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
        KMeansKind::Spherical => 1.0 - u.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>(),
    }
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, kind: KMeansKind, max_iters: usize, d: usize) -> KMeansModel {
    let c = centroids.len();
    let cost = |u: &[f64], mu: &[f64]| cost(kind, u, mu);
    let total = |centroids: &[Vec<f64>], assignment: &[u32]| -> f64 {
        data.iter().zip(assignment).map(|(u, &a)| cost(u, &centroids[a as usize])).sum()
    };
    let mut assignment = vec![u32::MAX; data.len()];
    let mut objective = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let next: Vec<u32> = data
            .par_iter()
            .map(|u| {
                let mut best = (f64::INFINITY, 0u32);
                for (i, mu) in centroids.iter().enumerate() {
                    let s = cost(u, mu);
                    if s < best.0 {
                        best = (s, i as u32);
                    }
                }
                best.1
            })
            .collect();
        let changed = next != assignment;
        assignment = next;
        if !changed {
            break;
        }
        repair_empty(data, &mut assignment, &centroids, c, &cost);
        centroids = update(data, &assignment, c, d, kind);
        objective.push(total(&centroids, &assignment));
    }
    if assignment.first() == Some(&u32::MAX) {
        assignment = data
            .iter()
            .map(|u| (0..c).map(|i| Neighbor::new(i as u32, cost(u, &centroids[i]))).min().map_or(0, |n| n.id))
            .collect();
    }
    if objective.is_empty() {
        objective.push(total(&centroids, &assignment));
    }
    KMeansModel {
        kind,
        dim: d,
        centroids: centroids.iter().flatten().map(|&v| v as f32).collect(),
        assignment,
        objective,
        iterations,
    }
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|a| *a /= n);
    Some(v)
}

fn seed_plus_plus<R: Rng>(
    data: &[Vec<f64>],
    c: usize,
    cost: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    rand: &mut R,
) -> Vec<Vec<f64>> {
    let m = data.len();
    let mut centroids = vec![data[rand.random_range(0..m)].clone()];
    let mut best: Vec<f64> = data.iter().map(|u| cost(u, &centroids[0]).max(0.0)).collect();
    while centroids.len() < c {
        let pick = match WeightedIndex::new(&best) {
            Ok(w) => w.sample(rand),
            // Every point already coincides with a centroid.
            Err(_) => rand.random_range(0..m),
        };
        centroids.push(data[pick].clone());
        let last = centroids.last().expect("just pushed");
        best.par_iter_mut().zip(data).for_each(|(b, u)| *b = b.min(cost(u, last).max(0.0)));
    }
    centroids
}

/// Gives each empty cluster the point of the largest cluster farthest from its centroid.
fn repair_empty(
    data: &[Vec<f64>],
    assignment: &mut [u32],
    centroids: &[Vec<f64>],
    c: usize,
    cost: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
) {
    let mut sizes = vec![0usize; c];
    assignment.iter().for_each(|&a| sizes[a as usize] += 1);
    for empty in 0..c {
        if sizes[empty] > 0 {
            continue;
        }
        let largest = (0..c).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).expect("c ≥ 1");
        if sizes[largest] < 2 {
            return;
        }
        let far = (0..data.len())
            .filter(|&i| assignment[i] as usize == largest)
            .map(|i| Neighbor::new(i as u32, -cost(&data[i], &centroids[largest])))
            .min()
            .expect("largest cluster is non-empty")
            .id;
        assignment[far as usize] = empty as u32;
        sizes[largest] -= 1;
        sizes[empty] = 1;
    }
}

fn update(data: &[Vec<f64>], assignment: &[u32], c: usize, d: usize, kind: KMeansKind) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0f64; d]; c];
    let mut counts = vec![0usize; c];
    for (u, &a) in data.iter().zip(assignment) {
        counts[a as usize] += 1;
        sums[a as usize].iter_mut().zip(u).for_each(|(s, v)| *s += v);
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut s, n)| {
            if n > 0 {
                s.iter_mut().for_each(|v| *v /= n as f64);
            }
            match kind {
                KMeansKind::Euclidean => s,
                KMeansKind::Spherical => normalized(s.clone()).unwrap_or(s),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvfIndex {
    pub model: KMeansModel,
    /// Sorted member ids per cluster.
    pub lists: Vec<Vec<u32>>,
    /// Kind used both for routing over centroids and for scanning lists.
    pub kind: DistanceKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IvfAnswer {
    pub result: TopKResult,
    pub scanned: usize,
}

impl IvfIndex {
    pub fn from_model(model: KMeansModel, kind: DistanceKind) -> Self {
        let mut lists = vec![Vec::new(); model.num_clusters()];
        for (id, &a) in model.assignment.iter().enumerate() {
            lists[a as usize].push(id as u32);
        }
        Self { model, lists, kind }
    }

    /// Trains KMeans with C = ⌈√m⌉ when `c` is None.
    pub fn build(
        x: &Collection,
        c: Option<usize>,
        kind: DistanceKind,
        clustering: KMeansKind,
        max_iters: usize,
        seed: u64,
    ) -> Result<Self> {
        let c = c.unwrap_or_else(|| (x.len() as f64).sqrt().ceil() as usize);
        Ok(Self::from_model(kmeans_train(x, c, clustering, max_iters, seed)?, kind))
    }

    pub fn num_clusters(&self) -> usize {
        self.lists.len()
    }

    pub fn search(&self, x: &Collection, q: &[f32], k: usize, ell: usize) -> Result<IvfAnswer> {
        if k == 0 {
            return invalid("k must be positive");
        }
        let clusters = route(self, q, ell)?;
        let mut top = TopK::new(k);
        let mut scanned = 0;
        for c in clusters {
            for &id in &self.lists[c as usize] {
                scanned += 1;
                top.push(Neighbor::new(id, self.kind.dense(q, x.row(id as usize))));
            }
        }
        Ok(IvfAnswer { result: top.into_result(), scanned })
    }
}

/// The ℓ best clusters for `q`, ranked by the index kind over centroids.
pub fn route(index: &IvfIndex, q: &[f32], ell: usize) -> Result<Vec<u32>> {
    let c = index.num_clusters();
    if ell == 0 || ell > c {
        return invalid(format!("ℓ must lie in [1, {c}]"));
    }
    if q.len() != index.model.dim {
        return Err(Error::DimensionMismatch { expected: index.model.dim, got: q.len() });
    }
    let mut top = TopK::new(ell);
    for i in 0..c {
        top.push(Neighbor::new(i as u32, index.kind.dense(q, index.model.centroid(i))));
    }
    Ok(top.into_result().ids())
}

pub fn ivf_search(index: &IvfIndex, x: &Collection, q: &[f32], k: usize, ell: usize) -> Result<TopKResult> {
    index.search(x, q, k, ell).map(|a| a.result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_locations_are_recovered() {
        let spots = [[0.0f32, 0.0], [5.0, 5.0], [-3.0, 4.0]];
        let rows: Vec<[f32; 2]> = (0..30).map(|i| spots[i % 3]).collect();
        let x = Collection::from_rows(&rows).unwrap();
        let model = kmeans_train(&x, 3, KMeansKind::Euclidean, 50, 1).unwrap();
        assert_eq!(*model.objective.last().unwrap(), 0.0);
        let mut found: Vec<Vec<f32>> = (0..3).map(|i| model.centroid(i).to_vec()).collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<Vec<f32>> = spots.iter().map(|s| s.to_vec()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(found, want);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let x = Collection::from_rows(&[[1.0f32, 2.0], [3.0, 6.0], [5.0, 1.0]]).unwrap();
        let model = kmeans_train(&x, 1, KMeansKind::Euclidean, 10, 0).unwrap();
        assert!((model.centroid(0)[0] - 3.0).abs() < 1e-6);
        assert!((model.centroid(0)[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn routes_by_hand_distance() {
        let model = KMeansModel {
            kind: KMeansKind::Euclidean,
            dim: 2,
            centroids: vec![0.0, 0.0, 10.0, 0.0],
            assignment: vec![0, 1],
            objective: vec![0.0],
            iterations: 1,
        };
        let index = IvfIndex::from_model(model, DistanceKind::L2Squared);
        assert_eq!(route(&index, &[2.0, 0.0], 1).unwrap(), vec![0]);
        assert_eq!(route(&index, &[10.0, 0.0], 2).unwrap(), vec![1, 0]);
        assert!(route(&index, &[0.0, 0.0], 3).is_err());
    }

    #[test]
    fn rejects_too_many_clusters() {
        let x = Collection::from_rows(&[[1.0f32], [2.0]]).unwrap();
        assert!(kmeans_train(&x, 3, KMeansKind::Euclidean, 5, 0).is_err());
    }
}
