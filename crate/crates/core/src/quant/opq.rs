use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pq::{pq_adc, pq_decode, pq_encode, pq_refine, pq_train, AdcTables, PqCodebook};
use crate::core::{Collection, Error, Result};

const TRAIN_ITERS: usize = 25;
const REFINE_ITERS: usize = 5;

/// PQ applied after an orthogonal rotation `u ↦ R u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpqModel {
    /// Row-major d × d.
    pub rotation: Vec<f64>,
    pub pq: PqCodebook,
    /// Mean squared reconstruction error: the initial PQ, then after each outer iteration.
    pub objective: Vec<f64>,
    /// max |R Rᵀ − I| after each outer iteration.
    pub orthogonality: Vec<f64>,
}

impl OpqModel {
    pub fn dim(&self) -> usize {
        self.pq.dim
    }

    pub fn rotate(&self, u: &[f32]) -> Vec<f32> {
        rotate_with(&self.rotation, u)
    }

    pub fn encode(&self, u: &[f32]) -> Vec<u32> {
        pq_encode(&self.pq, &self.rotate(u))
    }

    /// Reconstruction in the original space: Rᵀ applied to the PQ decode.
    pub fn decode(&self, code: &[u32]) -> Vec<f32> {
        let v = pq_decode(&self.pq, code);
        let d = self.dim();
        (0..d).map(|j| (0..d).map(|i| self.rotation[i * d + j] * v[i] as f64).sum::<f64>() as f32).collect()
    }

    pub fn adc(&self, q: &[f32]) -> Result<AdcTables> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: q.len() });
        }
        pq_adc(&self.pq, &self.rotate(q))
    }

    pub fn mse(&self, x: &Collection) -> f64 {
        self.pq.mse(&rotate_all(&self.rotation, x))
    }
}

fn rotate_with(r: &[f64], u: &[f32]) -> Vec<f32> {
    let d = u.len();
    (0..d).map(|i| r[i * d..(i + 1) * d].iter().zip(u).map(|(a, &b)| a * b as f64).sum::<f64>() as f32).collect()
}

fn rotate_all(r: &[f64], x: &Collection) -> Collection {
    let flat: Vec<f32> = x.rows().flat_map(|u| rotate_with(r, u)).collect();
    Collection::from_flat(x.dim(), flat).expect("rotation preserves shape")
}

fn max_orthogonality_error(r: &DMatrix<f64>) -> f64 {
    let d = r.nrows();
    (r * r.transpose() - DMatrix::<f64>::identity(d, d)).amax()
}

/// Alternates Lloyd refinement of the codebooks on rotated data with the
/// orthogonal Procrustes update of the rotation. Zero iterations is plain PQ.
pub fn opq_train(x: &Collection, l: usize, c: usize, iters: usize, seed: u64) -> Result<OpqModel> {
    let d = x.dim();
    let mut pq = pq_train(x, l, c, TRAIN_ITERS, seed)?;
    let mut rotation = DMatrix::<f64>::identity(d, d);
    let mut objective = vec![pq.mse(x)];
    let mut orthogonality = Vec::new();
    let data = DMatrix::from_fn(d, x.len(), |i, j| x.row(j)[i] as f64);
    for _ in 0..iters {
        let flat: Vec<f64> = rotation.transpose().iter().copied().collect();
        let rotated = rotate_all(&flat, x);
        let mut recon = DMatrix::<f64>::zeros(d, x.len());
        for (j, u) in rotated.rows().enumerate() {
            let v = pq_decode(&pq, &pq_encode(&pq, u));
            recon.column_mut(j).iter_mut().zip(v).for_each(|(a, b)| *a = b as f64);
        }
        let svd = (&recon * data.transpose()).svd(true, true);
        let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
        rotation = u * v_t;
        orthogonality.push(max_orthogonality_error(&rotation));
        let flat: Vec<f64> = rotation.transpose().iter().copied().collect();
        let rotated = rotate_all(&flat, x);
        pq = pq_refine(&rotated, &pq, REFINE_ITERS)?;
        objective.push(pq.mse(&rotated));
    }
    Ok(OpqModel { rotation: rotation.transpose().iter().copied().collect(), pq, objective, orthogonality })
}
