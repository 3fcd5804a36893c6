use serde::{Deserialize, Serialize};

use crate::core::{l2_sq, Collection, Neighbor, Result};
use crate::ivf::{kmeans_train, KMeansKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqCodebook {
    pub dim: usize,
    /// Row-major C × d.
    pub codewords: Vec<f32>,
}

impl VqCodebook {
    pub fn len(&self) -> usize {
        self.codewords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, j: usize) -> &[f32] {
        &self.codewords[j * self.dim..(j + 1) * self.dim]
    }

    /// Mean squared reconstruction error over a collection.
    pub fn mse(&self, x: &Collection) -> f64 {
        x.rows().map(|u| l2_sq(u, vq_decode(self, vq_encode(self, u)))).sum::<f64>() / x.len() as f64
    }
}

pub fn vq_train(x: &Collection, c: usize, max_iters: usize, seed: u64) -> Result<VqCodebook> {
    let model = kmeans_train(x, c, KMeansKind::Euclidean, max_iters, seed)?;
    Ok(VqCodebook { dim: model.dim, codewords: model.centroids })
}

/// Nearest codeword, ties to the lower index.
pub fn vq_encode(cb: &VqCodebook, u: &[f32]) -> u32 {
    (0..cb.len()).map(|j| Neighbor::new(j as u32, l2_sq(u, cb.codeword(j)))).min().map_or(0, |n| n.id)
}

pub fn vq_decode(cb: &VqCodebook, code: u32) -> &[f32] {
    cb.codeword(code as usize)
}
