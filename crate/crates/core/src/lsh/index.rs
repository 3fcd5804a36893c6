use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{check_input, FamilyKind, HashFamily, HashFunction};
use crate::core::{dot, invalid, l2_sq, norm_sq, Collection, DistanceKind, Neighbor, Result, TopKResult};
use crate::util::hash_words;

/// Multi-table LSH index. Table `t` keys each point by the ℓ-tuple of
/// functions `t·ℓ .. (t+1)·ℓ` of the family, mixed into 64 bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshIndex {
    family: HashFamily,
    ell: usize,
    functions: Vec<HashFunction>,
    tables: Vec<BTreeMap<u64, Vec<u32>>>,
    data: Collection,
}

/// Result of a point-location-in-equal-balls query.
#[derive(Clone, Debug, PartialEq)]
pub struct PlebAnswer {
    /// The first point found within (1 + eps) r, with its distance.
    pub witness: Option<Neighbor>,
    /// Number of distance evaluations spent (at most 4L).
    pub visited: usize,
    /// Every evaluated candidate with its distance, in visiting order.
    pub evaluated: Vec<Neighbor>,
}

impl PlebAnswer {
    pub fn is_yes(&self) -> bool {
        self.witness.is_some()
    }
}

impl LshIndex {
    pub fn build(x: &Collection, family: HashFamily, ell: usize, tables: usize) -> Result<Self> {
        if ell == 0 || tables == 0 {
            return invalid("ℓ and L must be at least 1");
        }
        if x.is_sparse() {
            return invalid("LSH tables need dense vectors");
        }
        if family.dim != x.dim() {
            return invalid("family dimension differs from the collection");
        }
        for row in x.rows() {
            check_input(family.kind, family.dim, row)?;
        }
        let functions: Vec<HashFunction> = (0..(tables * ell) as u64).map(|i| family.function(i)).collect();
        let built: Vec<BTreeMap<u64, Vec<u32>>> = (0..tables)
            .into_par_iter()
            .map(|t| {
                let fs = &functions[t * ell..(t + 1) * ell];
                let mut table: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
                for (i, row) in x.rows().enumerate() {
                    table.entry(Self::key_with(t, fs, row)).or_default().push(i as u32);
                }
                table
            })
            .collect();
        Ok(LshIndex { family, ell, functions, tables: built, data: x.clone() })
    }

    fn key_with(table: usize, fs: &[HashFunction], u: &[f32]) -> u64 {
        let vals: Vec<u64> = fs.iter().map(|f| f.hash(u) as u64).collect();
        hash_words(table as u64, &vals)
    }

    /// Bucket key of `u` in table `t`.
    pub fn key(&self, t: usize, u: &[f32]) -> u64 {
        Self::key_with(t, &self.functions[t * self.ell..(t + 1) * self.ell], u)
    }

    /// The composite hash g_t(u) as the raw ℓ-tuple.
    pub fn signature(&self, t: usize, u: &[f32]) -> Vec<i64> {
        self.functions[t * self.ell..(t + 1) * self.ell].iter().map(|f| f.hash(u)).collect()
    }

    pub fn bucket(&self, t: usize, q: &[f32]) -> &[u32] {
        self.tables[t].get(&self.key(t, q)).map_or(&[], |v| v.as_slice())
    }

    pub fn tables(&self) -> &[BTreeMap<u64, Vec<u32>>] {
        &self.tables
    }

    pub fn num_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn data(&self) -> &Collection {
        &self.data
    }

    /// Distance used by PLEB: Hamming for bit sampling, angle for hyperplanes,
    /// Euclidean between unit-normalized points for cross-polytope and
    /// Euclidean for p-stable.
    pub fn metric(&self, u: &[f32], v: &[f32]) -> f64 {
        match self.family.kind {
            FamilyKind::BitSampling => u.iter().zip(v).filter(|(a, b)| a != b).count() as f64,
            FamilyKind::Hyperplane => {
                let c = dot(u, v) / (norm_sq(u).sqrt() * norm_sq(v).sqrt());
                c.clamp(-1.0, 1.0).acos()
            }
            FamilyKind::CrossPolytope => {
                let c = dot(u, v) / (norm_sq(u).sqrt() * norm_sq(v).sqrt());
                (2.0 - 2.0 * c.clamp(-1.0, 1.0)).max(0.0).sqrt()
            }
            FamilyKind::PStable { .. } => l2_sq(u, v).sqrt(),
        }
    }

    /// Union of the query's buckets over all tables, ascending and deduplicated.
    pub fn candidates(&self, q: &[f32]) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.tables.len()).flat_map(|t| self.bucket(t, q).iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Exact rescoring of all bucket candidates under `kind`.
    pub fn search(&self, q: &[f32], k: usize, kind: DistanceKind) -> Result<TopKResult> {
        check_input(self.family.kind, self.family.dim, q)?;
        Ok(crate::core::rescore(&self.data, q, &self.candidates(q), k, kind))
    }

    /// Scans buckets g_1(q), ..., g_L(q) in order, ids ascending within a bucket,
    /// stopping at the first point within (1 + eps) r or after 4L evaluations.
    pub fn pleb_query(&self, q: &[f32], r: f64, eps: f64) -> Result<PlebAnswer> {
        check_input(self.family.kind, self.family.dim, q)?;
        if r < 0.0 || eps < 0.0 {
            return invalid("radius and eps must be non-negative");
        }
        let cap = 4 * self.tables.len();
        let limit = (1.0 + eps) * r;
        let mut evaluated = Vec::new();
        for t in 0..self.tables.len() {
            for &id in self.bucket(t, q) {
                if evaluated.len() == cap {
                    return Ok(PlebAnswer { witness: None, visited: cap, evaluated });
                }
                let d = self.metric(q, self.data.row(id as usize));
                let n = Neighbor::new(id, d);
                evaluated.push(n);
                if d <= limit {
                    let visited = evaluated.len();
                    return Ok(PlebAnswer { witness: Some(n), visited, evaluated });
                }
            }
        }
        Ok(PlebAnswer { witness: None, visited: evaluated.len(), evaluated })
    }
}
