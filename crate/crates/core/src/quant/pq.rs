use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{invalid, l2_sq, Collection, Error, Neighbor, Result};
use crate::ivf::{kmeans_refine, kmeans_train, KMeansKind};
use crate::util::child_seed;

/// L codebooks over contiguous chunks of width d/L, each with C codewords.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqCodebook {
    pub dim: usize,
    pub subspaces: usize,
    pub codewords_per_subspace: usize,
    /// Layout [subspace][codeword][sub_dim].
    pub codewords: Vec<f32>,
}

impl PqCodebook {
    pub fn sub_dim(&self) -> usize {
        self.dim / self.subspaces
    }

    pub fn codeword(&self, i: usize, j: usize) -> &[f32] {
        let w = self.sub_dim();
        let start = (i * self.codewords_per_subspace + j) * w;
        &self.codewords[start..start + w]
    }

    fn chunk<'a>(&self, u: &'a [f32], i: usize) -> &'a [f32] {
        let w = self.sub_dim();
        &u[i * w..(i + 1) * w]
    }

    pub fn encode_all(&self, x: &Collection) -> Vec<Vec<u32>> {
        (0..x.len()).into_par_iter().map(|i| pq_encode(self, x.row(i))).collect()
    }

    pub fn mse(&self, x: &Collection) -> f64 {
        let total: f64 = (0..x.len())
            .into_par_iter()
            .map(|i| {
                let u = x.row(i);
                l2_sq(u, &pq_decode(self, &pq_encode(self, u)))
            })
            .sum();
        total / x.len() as f64
    }
}

fn chunk_collection(x: &Collection, start: usize, width: usize) -> Result<Collection> {
    let mut flat = Vec::with_capacity(x.len() * width);
    for row in x.rows() {
        flat.extend_from_slice(&row[start..start + width]);
    }
    Collection::from_flat(width, flat)
}

fn check_layout(x: &Collection, l: usize, c: usize) -> Result<()> {
    if x.is_sparse() {
        return invalid("PQ needs a dense collection");
    }
    if l == 0 || !x.dim().is_multiple_of(l) {
        return invalid(format!("dimension {} is not divisible by L = {l}", x.dim()));
    }
    if c == 0 || c > x.len() {
        return invalid(format!("C must lie in [1, {}]", x.len()));
    }
    Ok(())
}

/// Independent KMeans per chunk.
pub fn pq_train(x: &Collection, l: usize, c: usize, max_iters: usize, seed: u64) -> Result<PqCodebook> {
    check_layout(x, l, c)?;
    let w = x.dim() / l;
    let books = (0..l)
        .into_par_iter()
        .map(|i| {
            let sub = chunk_collection(x, i * w, w)?;
            Ok(kmeans_train(&sub, c, KMeansKind::Euclidean, max_iters, child_seed(seed, i as u64))?.centroids)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PqCodebook { dim: x.dim(), subspaces: l, codewords_per_subspace: c, codewords: books.concat() })
}

/// Lloyd iterations per chunk starting from an existing codebook.
pub(crate) fn pq_refine(x: &Collection, cb: &PqCodebook, max_iters: usize) -> Result<PqCodebook> {
    let w = cb.sub_dim();
    let c = cb.codewords_per_subspace;
    let books = (0..cb.subspaces)
        .into_par_iter()
        .map(|i| {
            let sub = chunk_collection(x, i * w, w)?;
            let init = &cb.codewords[i * c * w..(i + 1) * c * w];
            Ok(kmeans_refine(&sub, init, KMeansKind::Euclidean, max_iters)?.centroids)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PqCodebook { codewords: books.concat(), ..cb.clone() })
}

pub fn pq_encode(cb: &PqCodebook, u: &[f32]) -> Vec<u32> {
    (0..cb.subspaces)
        .map(|i| {
            let part = cb.chunk(u, i);
            (0..cb.codewords_per_subspace)
                .map(|j| Neighbor::new(j as u32, l2_sq(part, cb.codeword(i, j))))
                .min()
                .map_or(0, |n| n.id)
        })
        .collect()
}

pub fn pq_decode(cb: &PqCodebook, code: &[u32]) -> Vec<f32> {
    code.iter().enumerate().flat_map(|(i, &j)| cb.codeword(i, j as usize).iter().copied()).collect()
}

/// Per-query lookup tables, L × C, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AdcTables {
    pub subspaces: usize,
    pub codewords_per_subspace: usize,
    pub table: Vec<f64>,
}

impl AdcTables {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.codewords_per_subspace + j]
    }
}

/// Squared distances from each query chunk to every codeword of its subspace.
pub fn pq_adc(cb: &PqCodebook, q: &[f32]) -> Result<AdcTables> {
    if q.len() != cb.dim {
        return Err(Error::DimensionMismatch { expected: cb.dim, got: q.len() });
    }
    let c = cb.codewords_per_subspace;
    let mut table = Vec::with_capacity(cb.subspaces * c);
    for i in 0..cb.subspaces {
        let part = cb.chunk(q, i);
        table.extend((0..c).map(|j| l2_sq(part, cb.codeword(i, j))));
    }
    Ok(AdcTables { subspaces: cb.subspaces, codewords_per_subspace: c, table })
}

pub fn pq_adc_distance(tables: &AdcTables, code: &[u32]) -> f64 {
    code.iter().enumerate().map(|(i, &j)| tables.get(i, j as usize)).sum()
}
