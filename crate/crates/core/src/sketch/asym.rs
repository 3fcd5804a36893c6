use serde::{Deserialize, Serialize};

use crate::core::{invalid, Error, Result, VectorRef};
use crate::util::hash_words;

/// Configuration shared by sketches and queries: d◦/2 buckets, h mappings
/// π_o(i) = hash(seed, o, i) mod d◦/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymSketcher {
    pub sketch_size: usize,
    pub mappings: usize,
    pub seed: u64,
    /// Keep the lower-bound half; may be dropped for non-negative data.
    pub lower: bool,
    /// Treat every coordinate as present and skip storing nz(u).
    pub dense: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymSketch {
    pub dim: usize,
    pub nz: Option<Vec<u32>>,
    pub upper: Vec<f32>,
    pub lower: Option<Vec<f32>>,
}

impl AsymSketcher {
    pub fn new(sketch_size: usize, mappings: usize, seed: u64) -> Result<Self> {
        if sketch_size == 0 || !sketch_size.is_multiple_of(2) {
            return invalid("sketch size must be even and positive");
        }
        if mappings == 0 {
            return invalid("need at least one mapping");
        }
        Ok(Self { sketch_size, mappings, seed, lower: true, dense: false })
    }

    pub fn upper_only(mut self) -> Self {
        self.lower = false;
        self
    }

    pub fn dense_mode(mut self) -> Self {
        self.dense = true;
        self
    }

    pub fn buckets(&self) -> usize {
        self.sketch_size / 2
    }

    #[inline]
    pub fn bucket(&self, o: usize, i: usize) -> usize {
        (hash_words(self.seed, &[o as u64, i as u64]) % self.buckets() as u64) as usize
    }

    fn entries<'a>(&self, u: VectorRef<'a>) -> Vec<(usize, f32)> {
        match u {
            VectorRef::Dense(v) if self.dense => v.iter().copied().enumerate().collect(),
            VectorRef::Dense(v) => v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect(),
            VectorRef::Sparse(v) => v.indices().iter().map(|&i| i as usize).zip(v.values().iter().copied()).collect(),
        }
    }

    pub fn sketch<'a>(&self, u: impl Into<VectorRef<'a>>) -> Result<AsymSketch> {
        let u = u.into();
        let entries = self.entries(u);
        if !self.lower && entries.iter().any(|&(_, x)| x < 0.0) {
            return invalid("upper-only sketches need non-negative vectors");
        }
        let b = self.buckets();
        let mut upper: Vec<Option<f32>> = vec![None; b];
        let mut lower: Vec<Option<f32>> = vec![None; b];
        for &(i, x) in &entries {
            for o in 0..self.mappings {
                let k = self.bucket(o, i);
                upper[k] = Some(upper[k].map_or(x, |c| c.max(x)));
                lower[k] = Some(lower[k].map_or(x, |c| c.min(x)));
            }
        }
        let finish = |v: Vec<Option<f32>>| v.into_iter().map(|x| x.unwrap_or(0.0)).collect::<Vec<f32>>();
        Ok(AsymSketch {
            dim: u.dim(),
            nz: (!self.dense).then(|| entries.iter().map(|&(i, _)| i as u32).collect()),
            upper: finish(upper),
            lower: self.lower.then(|| finish(lower)),
        })
    }

    /// Upper bound on ⟨q, u⟩: each shared coordinate contributes q_i times the
    /// least upper bound (q_i > 0) or greatest lower bound (q_i < 0) of u_i.
    pub fn upper_bound<'a>(&self, q: impl Into<VectorRef<'a>>, s: &AsymSketch) -> Result<f64> {
        let q = q.into();
        if q.dim() != s.dim {
            return Err(Error::DimensionMismatch { expected: s.dim, got: q.dim() });
        }
        let query: Vec<(usize, f32)> = match q {
            VectorRef::Dense(v) => v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect(),
            VectorRef::Sparse(v) => v.indices().iter().map(|&i| i as usize).zip(v.values().iter().copied()).collect(),
        };
        let mut total = 0.0f64;
        for (i, qi) in query {
            if let Some(nz) = &s.nz {
                if nz.binary_search(&(i as u32)).is_err() {
                    continue;
                }
            }
            let buckets = (0..self.mappings).map(|o| self.bucket(o, i));
            let estimate = if qi > 0.0 {
                buckets.map(|k| s.upper[k]).fold(f32::INFINITY, f32::min)
            } else {
                match &s.lower {
                    Some(lower) => buckets.map(|k| lower[k]).fold(f32::NEG_INFINITY, f32::max),
                    None => 0.0,
                }
            };
            total += qi as f64 * estimate as f64;
        }
        Ok(total)
    }
}

pub fn asym_sketch<'a>(
    u: impl Into<VectorRef<'a>>,
    sketch_size: usize,
    mappings: usize,
    seed: u64,
) -> Result<AsymSketch> {
    AsymSketcher::new(sketch_size, mappings, seed)?.sketch(u)
}

pub fn asym_upper_bound<'a>(sketcher: &AsymSketcher, q: impl Into<VectorRef<'a>>, s: &AsymSketch) -> Result<f64> {
    sketcher.upper_bound(q, s)
}
