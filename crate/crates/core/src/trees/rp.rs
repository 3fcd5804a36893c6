use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::{dot, invalid, Collection, DistanceKind, Error, Result, TopKResult};
use crate::util::{child_seed, rng, unit_direction};

/// How an internal node divides the projections of its points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    /// Partition at a β-fractile with β ~ U[1/4, 3/4].
    RandomFractile,
    /// Partition at a fixed fractile.
    FixedFractile(f64),
    /// Overlapping children between the (1/2 - α) and (1/2 + α) fractiles.
    Spill(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RpNode {
    Split { direction: Vec<f32>, threshold: f64, left: u32, right: u32 },
    Leaf { ids: Vec<u32> },
}

/// One random partition tree. Points are referenced by id into the forest's collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpTree {
    nodes: Vec<RpNode>,
}

/// Random projection trees (or spill trees) over one shared collection,
/// queried by defeatist descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpForest {
    data: Collection,
    leaf_size: usize,
    rule: SplitRule,
    seed: u64,
    trees: Vec<RpTree>,
}

pub type SpillForest = RpForest;

#[inline]
fn project(direction: &[f32], v: &[f32]) -> f64 {
    dot(direction, v)
}

/// Fractile index for fraction p of n sorted values, clamped to [0, n - 2].
fn fractile_index(p: f64, n: usize) -> usize {
    let i = ((p * n as f64).ceil() as usize).max(1) - 1;
    i.min(n - 2)
}

struct Builder<'a> {
    data: &'a Collection,
    leaf_size: usize,
    rule: SplitRule,
    rng: rand::rngs::StdRng,
    nodes: Vec<RpNode>,
}

impl Builder<'_> {
    fn grow(&mut self, ids: &[u32]) -> u32 {
        let slot = self.nodes.len() as u32;
        if ids.len() <= self.leaf_size || ids.len() < 2 {
            self.nodes.push(RpNode::Leaf { ids: ids.to_vec() });
            return slot;
        }
        let direction = unit_direction(&mut self.rng, self.data.dim());
        let mut proj: Vec<(f64, u32)> =
            ids.iter().map(|&i| (project(&direction, self.data.row(i as usize)), i)).collect();
        proj.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = proj.len();
        let (threshold, left_ids, right_ids): (f64, Vec<u32>, Vec<u32>) = match self.rule {
            SplitRule::RandomFractile | SplitRule::FixedFractile(_) => {
                let beta = match self.rule {
                    SplitRule::FixedFractile(b) => b,
                    _ => self.rng.random_range(0.25..=0.75),
                };
                let cut = fractile_index(beta, n);
                (proj[cut].0, proj[..=cut].iter().map(|p| p.1).collect(), proj[cut + 1..].iter().map(|p| p.1).collect())
            }
            SplitRule::Spill(alpha) => {
                let median = fractile_index(0.5, n);
                let hi = fractile_index(0.5 + alpha, n);
                let lo = ((0.5 - alpha) * n as f64).ceil() as usize;
                let lo = lo.clamp(1, n - 1);
                (proj[median].0, proj[..=hi].iter().map(|p| p.1).collect(), proj[lo..].iter().map(|p| p.1).collect())
            }
        };
        self.nodes.push(RpNode::Leaf { ids: Vec::new() });
        let left = self.grow(&left_ids);
        let right = self.grow(&right_ids);
        self.nodes[slot as usize] = RpNode::Split { direction, threshold, left, right };
        slot
    }
}

impl RpTree {
    fn build(data: &Collection, leaf_size: usize, rule: SplitRule, seed: u64) -> Self {
        let mut b = Builder { data, leaf_size, rule, rng: rng(seed), nodes: Vec::new() };
        let ids: Vec<u32> = (0..data.len() as u32).collect();
        b.grow(&ids);
        RpTree { nodes: b.nodes }
    }

    pub fn nodes(&self) -> &[RpNode] {
        &self.nodes
    }

    /// Ids of the leaf reached by routing `q` from the root.
    pub fn route(&self, q: &[f32]) -> &[u32] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                RpNode::Leaf { ids } => return ids,
                RpNode::Split { direction, threshold, left, right } => {
                    i = if project(direction, q) <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Ids held under each node, indexed like `nodes`.
    pub fn node_sets(&self) -> Vec<Vec<u32>> {
        fn fill(nodes: &[RpNode], i: usize, out: &mut Vec<Vec<u32>>) -> Vec<u32> {
            let mut ids = match &nodes[i] {
                RpNode::Leaf { ids } => ids.clone(),
                RpNode::Split { left, right, .. } => {
                    let mut a = fill(nodes, *left as usize, out);
                    a.extend(fill(nodes, *right as usize, out));
                    a
                }
            };
            ids.sort_unstable();
            ids.dedup();
            out[i] = ids.clone();
            ids
        }
        let mut out = vec![Vec::new(); self.nodes.len()];
        if !self.nodes.is_empty() {
            fill(&self.nodes, 0, &mut out);
        }
        out
    }

    /// Total number of ids stored across leaves, counting duplicates.
    pub fn leaf_total(&self) -> usize {
        self.nodes.iter().map(|n| if let RpNode::Leaf { ids } = n { ids.len() } else { 0 }).sum()
    }
}

impl RpForest {
    pub fn build(x: &Collection, leaf_size: usize, rule: SplitRule, trees: usize, seed: u64) -> Result<Self> {
        if leaf_size == 0 {
            return invalid("leaf size must be at least 1");
        }
        if trees == 0 {
            return invalid("forest needs at least one tree");
        }
        if x.is_sparse() {
            return invalid("partition trees need dense vectors");
        }
        match rule {
            SplitRule::Spill(a) if !(0.0..0.5).contains(&a) => {
                return Err(Error::InvalidParameter(format!("spill overlap {a} must lie in [0, 1/2)")))
            }
            SplitRule::FixedFractile(b) if !(b > 0.0 && b < 1.0) => return invalid("fractile must lie in (0, 1)"),
            _ => {}
        }
        let trees = (0..trees).map(|t| RpTree::build(x, leaf_size, rule, child_seed(seed, t as u64))).collect();
        Ok(RpForest { data: x.clone(), leaf_size, rule, seed, trees })
    }

    pub fn trees(&self) -> &[RpTree] {
        &self.trees
    }

    pub fn data(&self) -> &Collection {
        &self.data
    }

    pub fn rule(&self) -> SplitRule {
        self.rule
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Candidate ids: the union of the leaves reached in every tree, deduplicated.
    pub fn candidates(&self, q: &[f32]) -> Vec<u32> {
        let mut ids: Vec<u32> = self.trees.iter().flat_map(|t| t.route(q).iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Defeatist search: route to one leaf per tree and scan the union exactly.
    pub fn search(&self, q: &[f32], k: usize) -> Result<TopKResult> {
        if k == 0 {
            return invalid("k must be at least 1");
        }
        if q.len() != self.data.dim() {
            return Err(Error::DimensionMismatch { expected: self.data.dim(), got: q.len() });
        }
        Ok(crate::core::rescore(&self.data, q, &self.candidates(q), k, DistanceKind::L2Squared))
    }
}

/// Single random projection tree with β ~ U[1/4, 3/4].
pub fn rp_build(x: &Collection, leaf_size: usize, seed: u64) -> Result<RpForest> {
    RpForest::build(x, leaf_size, SplitRule::RandomFractile, 1, seed)
}

/// Single spill tree with overlap α.
pub fn spill_build(x: &Collection, leaf_size: usize, alpha: f64, seed: u64) -> Result<SpillForest> {
    RpForest::build(x, leaf_size, SplitRule::Spill(alpha), 1, seed)
}

pub fn defeatist_search(forest: &RpForest, q: &[f32], k: usize) -> Result<TopKResult> {
    forest.search(q, k)
}

/// Mean ratio of the nearest distance to each of the s nearest distances (unsquared L2).
pub fn potential_phi(x: &Collection, q: &[f32], s: usize) -> Result<f64> {
    if s < 2 || s > x.len() {
        return invalid(format!("s must lie in [2, {}]", x.len()));
    }
    let top = crate::core::brute_force_topk(x, q, s, DistanceKind::L2Squared)?;
    let d: Vec<f64> = top.scores().iter().map(|s| s.sqrt()).collect();
    if d[0] == 0.0 {
        return invalid("query coincides with its nearest neighbor");
    }
    Ok(d.iter().map(|di| d[0] / di).sum::<f64>() / s as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::gaussian_vec;

    fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
        let mut r = rng(seed);
        let rows: Vec<Vec<f32>> = (0..m).map(|_| gaussian_vec(&mut r, d)).collect();
        Collection::from_rows(&rows).unwrap()
    }

    #[test]
    fn rp_child_fractions_and_unit_directions() {
        let x = gaussian(1000, 8, 2);
        let f = rp_build(&x, 10, 9).unwrap();
        let t = &f.trees()[0];
        let sets = t.node_sets();
        for (i, node) in t.nodes().iter().enumerate() {
            if let RpNode::Split { direction, left, right, .. } = node {
                let n = sets[i].len();
                let l = sets[*left as usize].len();
                let r = sets[*right as usize].len();
                assert_eq!(l + r, n);
                assert!(l >= n / 4 && l <= (3 * n).div_ceil(4), "n={n} l={l}");
                let norm: f64 = direction.iter().map(|&v| v as f64 * v as f64).sum();
                assert!((norm - 1.0).abs() < 1e-6);
            }
        }
        assert_eq!(t.leaf_total(), 1000);
    }

    #[test]
    fn spill_zero_equals_median_rp() {
        let x = gaussian(300, 5, 3);
        let s = spill_build(&x, 8, 0.0, 11).unwrap();
        let r = RpForest::build(&x, 8, SplitRule::FixedFractile(0.5), 1, 11).unwrap();
        assert_eq!(s.trees()[0].node_sets(), r.trees()[0].node_sets());
    }

    #[test]
    fn spill_duplicates_and_child_bounds() {
        let x = gaussian(1024, 6, 4);
        let alpha = 0.1;
        let s = spill_build(&x, 16, alpha, 5).unwrap();
        let t = &s.trees()[0];
        assert!(t.leaf_total() > 1024);
        let sets = t.node_sets();
        for (i, node) in t.nodes().iter().enumerate() {
            if let RpNode::Split { left, right, .. } = node {
                let n = sets[i].len();
                let hi = ((0.5 + alpha) * n as f64).ceil() as usize;
                for c in [*left, *right] {
                    let c = sets[c as usize].len();
                    assert!(c >= n / 2 && c <= hi && c < n, "n={n} child={c}");
                }
            }
        }
    }

    #[test]
    fn spill_rejects_half() {
        let x = gaussian(10, 2, 1);
        assert!(spill_build(&x, 2, 0.5, 1).is_err());
    }

    #[test]
    fn deterministic() {
        let x = gaussian(200, 4, 6);
        assert_eq!(rp_build(&x, 5, 1).unwrap(), rp_build(&x, 5, 1).unwrap());
        assert_eq!(spill_build(&x, 5, 0.1, 1).unwrap(), spill_build(&x, 5, 0.1, 1).unwrap());
    }

    #[test]
    fn single_leaf_is_exact() {
        let x = gaussian(20, 4, 8);
        let f = rp_build(&x, 32, 0).unwrap();
        let q = [0.1f32, 0.2, -0.3, 0.0];
        let a = f.search(&q, 5).unwrap();
        let b = crate::core::brute_force_topk(&x, &q[..], 5, DistanceKind::L2Squared).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phi_values() {
        let x = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 2.0], [5.0, 5.0]]).unwrap();
        let phi = potential_phi(&x, &[0.0, 0.0], 2).unwrap();
        assert!((phi - 0.75).abs() < 1e-12);
        let ring = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!((potential_phi(&ring, &[0.0, 0.0], 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(potential_phi(&x, &[0.0, 0.0], 1).is_err());
        assert!(potential_phi(&x, &[1.0, 0.0], 2).is_err());
    }
}
