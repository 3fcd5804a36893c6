use rand::Rng;
use serde::{Deserialize, Serialize};

use super::family::{pstable_collision, FamilyKind, HashFamily};
use super::index::LshIndex;
use super::params::{derive_params, LshParams};
use crate::core::{invalid, l2_sq, Collection, DistanceKind, Error, Neighbor, Result, TopKResult};
use crate::transforms::{mips_to_mcs, TransformedPair};
use crate::util::{child_seed, rng};

/// Minimum and maximum pairwise distance estimated from random pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectEstimate {
    pub min_distance: f64,
    pub max_distance: f64,
    pub pairs: usize,
}

impl AspectEstimate {
    pub fn ratio(&self) -> f64 {
        self.max_distance / self.min_distance
    }
}

/// Samples `pairs` random distinct pairs and records the extreme non-zero distances.
pub fn estimate_aspect(x: &Collection, pairs: usize, seed: u64) -> Result<AspectEstimate> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter("aspect ratio needs two points".into()));
    }
    let mut r = rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..pairs {
        let i = r.random_range(0..x.len());
        let mut j = r.random_range(0..x.len() - 1);
        if j >= i {
            j += 1;
        }
        let d = l2_sq(x.row(i), x.row(j)).sqrt();
        if d > 0.0 {
            lo = lo.min(d);
        }
        hi = hi.max(d);
    }
    if hi == 0.0 || !lo.is_finite() {
        return invalid("all sampled points coincide");
    }
    Ok(AspectEstimate { min_distance: lo, max_distance: hi, pairs })
}

/// Tuning for the PLEB-to-nearest-neighbor reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxNnConfig {
    pub eps: f64,
    /// Bucket width as a multiple of the level radius.
    pub width_factor: f64,
    pub aspect_pairs: usize,
    pub seed: u64,
}

impl ApproxNnConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, width_factor: 1.0, aspect_pairs: 1000, seed }
    }
}

/// One p-stable PLEB index per radius δ_min (1 + ε)^i up to the estimated diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxNn {
    config: ApproxNnConfig,
    aspect: AspectEstimate,
    params: LshParams,
    p1: f64,
    p2: f64,
    radii: Vec<f64>,
    levels: Vec<LshIndex>,
}

impl ApproxNn {
    pub fn build(x: &Collection, config: ApproxNnConfig) -> Result<Self> {
        if config.eps <= 0.0 || config.width_factor <= 0.0 {
            return invalid("eps and width factor must be positive");
        }
        let aspect = estimate_aspect(x, config.aspect_pairs, child_seed(config.seed, 0))?;
        // Both probabilities depend only on width / radius, so one setting serves every level.
        let p1 = pstable_collision(1.0, config.width_factor);
        let p2 = pstable_collision(1.0 + config.eps, config.width_factor);
        let params = derive_params(x.len(), p1, p2)?;
        let steps = (aspect.ratio().ln() / (1.0 + config.eps).ln()).floor().max(0.0) as usize;
        let radii: Vec<f64> = (0..=steps).map(|i| aspect.min_distance * (1.0 + config.eps).powi(i as i32)).collect();
        let levels = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let fam = HashFamily::new(
                    FamilyKind::PStable { width: config.width_factor * r },
                    child_seed(config.seed, 1 + i as u64),
                    x.dim(),
                )?;
                LshIndex::build(x, fam, params.ell, params.tables)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ApproxNn { config, aspect, params, p1, p2, radii, levels })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn params(&self) -> LshParams {
        self.params
    }

    pub fn probabilities(&self) -> (f64, f64) {
        (self.p1, self.p2)
    }

    pub fn aspect(&self) -> AspectEstimate {
        self.aspect
    }

    /// Binary search for the smallest radius whose PLEB answers yes. Returns the
    /// closest point evaluated at that level, scored in squared L2, or `None`
    /// when even the largest radius says no.
    pub fn query(&self, q: &[f32]) -> Result<Option<Neighbor>> {
        let (mut lo, mut hi) = (0i64, self.levels.len() as i64 - 1);
        let mut best: Option<(usize, Vec<Neighbor>)> = None;
        while lo <= hi {
            let mid = ((lo + hi) / 2) as usize;
            let ans = self.levels[mid].pleb_query(q, self.radii[mid], self.config.eps)?;
            if ans.is_yes() {
                best = Some((mid, ans.evaluated));
                hi = mid as i64 - 1;
            } else {
                lo = mid as i64 + 1;
            }
        }
        let data = self.levels[0].data();
        Ok(best.map(|(_, evaluated)| {
            evaluated
                .into_iter()
                .map(|n| Neighbor::new(n.id, l2_sq(q, data.row(n.id as usize))))
                .min()
                .expect("a yes answer evaluated at least one point")
        }))
    }
}

/// One-shot reduction: builds the level indexes and answers a single query.
pub fn approx_nn(x: &Collection, q: &[f32], eps: f64, seed: u64) -> Result<Option<Neighbor>> {
    ApproxNn::build(x, ApproxNnConfig::new(eps, seed))?.query(q)
}

/// Hyperplane LSH over data lifted onto the unit sphere, answering MIPS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MipsLsh {
    transform: TransformedPair,
    index: LshIndex,
    data: Collection,
}

impl MipsLsh {
    pub fn build(x: &Collection, ell: usize, tables: usize, seed: u64) -> Result<Self> {
        let transform = mips_to_mcs(x);
        let lifted = transform.apply(x)?;
        let fam = HashFamily::new(FamilyKind::Hyperplane, seed, lifted.dim())?;
        let index = LshIndex::build(&lifted, fam, ell, tables)?;
        Ok(MipsLsh { transform, index, data: x.clone() })
    }

    pub fn index(&self) -> &LshIndex {
        &self.index
    }

    pub fn transform(&self) -> &TransformedPair {
        &self.transform
    }

    /// Bucket candidates rescored by exact inner product on the original data.
    pub fn search(&self, q: &[f32], k: usize) -> Result<TopKResult> {
        let lifted = match self.transform.map_query(q)? {
            crate::core::Vector::Dense(v) => v.into_inner(),
            crate::core::Vector::Sparse(s) => s.to_dense(),
        };
        let ids = self.index.candidates(&lifted);
        Ok(crate::core::rescore(&self.data, q, &ids, k, DistanceKind::NegInnerProduct))
    }
}

pub fn mips_hash_index(x: &Collection, ell: usize, tables: usize, seed: u64) -> Result<MipsLsh> {
    MipsLsh::build(x, ell, tables, seed)
}
