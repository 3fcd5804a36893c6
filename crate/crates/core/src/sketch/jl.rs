use serde::{Deserialize, Serialize};

use crate::core::VectorRef;
use crate::util::hash_words;

/// Φ = R/√d◦ with R_{ij} ∈ {±1} drawn by hashing (seed, i, j).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JlSketcher {
    pub sketch_dim: usize,
    pub seed: u64,
}

impl JlSketcher {
    pub fn new(sketch_dim: usize, seed: u64) -> Self {
        Self { sketch_dim, seed }
    }

    #[inline]
    pub fn sign(&self, row: usize, col: usize) -> f64 {
        if hash_words(self.seed, &[row as u64, col as u64]) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn project<'a>(&self, u: impl Into<VectorRef<'a>>) -> Vec<f32> {
        let scale = 1.0 / (self.sketch_dim as f64).sqrt();
        let u = u.into();
        (0..self.sketch_dim)
            .map(|row| {
                let s: f64 = match u {
                    VectorRef::Dense(v) => v.iter().enumerate().map(|(c, &x)| self.sign(row, c) * x as f64).sum(),
                    VectorRef::Sparse(v) => {
                        v.indices().iter().zip(v.values()).map(|(&c, &x)| self.sign(row, c as usize) * x as f64).sum()
                    }
                };
                (s * scale) as f32
            })
            .collect()
    }
}

/// Inner product of two sketches.
pub fn jl_ip_estimate(su: &[f32], sv: &[f32]) -> f64 {
    crate::core::dot(su, sv)
}

/// (1/d◦)(‖u‖²‖v‖² + ⟨u,v⟩² − 2 Σ u_i² v_i²).
pub fn jl_variance(u: &[f32], v: &[f32], sketch_dim: usize) -> f64 {
    let (uu, vv, uv) = (crate::core::norm_sq(u), crate::core::norm_sq(v), crate::core::dot(u, v));
    let cross: f64 = u.iter().zip(v).map(|(&a, &b)| (a as f64 * b as f64).powi(2)).sum();
    (uu * vv + uv * uv - 2.0 * cross) / sketch_dim as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_sketches_to_zero() {
        let s = JlSketcher::new(16, 3);
        let z = s.project(&[0.0f32; 10][..]);
        assert!(z.iter().all(|&v| v == 0.0));
        assert_eq!(jl_ip_estimate(&z, &s.project(&[1.0f32; 10][..])), 0.0);
    }

    #[test]
    fn entries_are_scaled_signs_and_deterministic() {
        let s = JlSketcher::new(4, 9);
        for c in 0..5 {
            let mut e = [0.0f32; 5];
            e[c] = 1.0;
            let col = s.project(&e[..]);
            assert!(col.iter().all(|&v| (v.abs() - 0.5).abs() < 1e-7));
            assert_eq!(col, JlSketcher::new(4, 9).project(&e[..]));
        }
    }

    #[test]
    fn sparse_and_dense_agree() {
        let dense = [0.0f32, 2.0, 0.0, -1.5, 0.0];
        let sparse = crate::core::SparseVector::from_dense(&dense).unwrap();
        let s = JlSketcher::new(8, 1);
        assert_eq!(s.project(&dense[..]), s.project(&sparse));
    }
}
