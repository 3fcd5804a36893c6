use serde::{Deserialize, Serialize};

use crate::core::{invalid, norm_sq, Result, VectorRef};
use crate::util::hash_unit;

/// Sampled coordinates with their exact values, plus ‖u‖² and d◦.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSketch {
    pub indices: Vec<u32>,
    pub values: Vec<f32>,
    pub norm_sq: f64,
    pub sketch_size: usize,
}

impl ThresholdSketch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn inclusion(&self, value: f32) -> f64 {
        (self.sketch_size as f64 * (value as f64).powi(2) / self.norm_sq).min(1.0)
    }
}

/// Keeps coordinate i when π(i) ≤ d◦ u_i²/‖u‖², with π(i) = hash(seed, i) uniform on [0, 1).
/// Sketches are comparable only when built with the same seed.
pub fn threshold_sketch<'a>(u: impl Into<VectorRef<'a>>, sketch_size: usize, seed: u64) -> Result<ThresholdSketch> {
    let u = u.into();
    let entries: Vec<(u32, f32)> = match u {
        VectorRef::Dense(v) => v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i as u32, x)).collect(),
        VectorRef::Sparse(v) => v.indices().iter().copied().zip(v.values().iter().copied()).collect(),
    };
    let norm = match u {
        VectorRef::Dense(v) => norm_sq(v),
        VectorRef::Sparse(v) => norm_sq(v.values()),
    };
    if norm == 0.0 {
        return invalid("cannot sketch a zero vector");
    }
    let mut sketch = ThresholdSketch { indices: Vec::new(), values: Vec::new(), norm_sq: norm, sketch_size };
    for (i, x) in entries {
        let theta = sketch_size as f64 * (x as f64).powi(2) / norm;
        if hash_unit(seed, &[i as u64]) <= theta {
            sketch.indices.push(i);
            sketch.values.push(x);
        }
    }
    Ok(sketch)
}

/// Σ over shared sampled coordinates of u_i v_i / min(1, d◦u_i²/‖u‖², d◦v_i²/‖v‖²).
pub fn threshold_ip_estimate(su: &ThresholdSketch, sv: &ThresholdSketch) -> f64 {
    let (mut a, mut b) = (0, 0);
    let mut total = 0.0;
    while a < su.len() && b < sv.len() {
        match su.indices[a].cmp(&sv.indices[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                let (x, y) = (su.values[a], sv.values[b]);
                let p = su.inclusion(x).min(sv.inclusion(y));
                total += x as f64 * y as f64 / p;
                a += 1;
                b += 1;
            }
        }
    }
    total
}

/// (2/d◦) max(‖u_*‖²‖v‖², ‖u‖²‖v_*‖²), where * restricts to the common support.
pub fn threshold_variance_bound(u: &[f32], v: &[f32], sketch_size: usize) -> f64 {
    let (mut us, mut vs) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        if a != 0.0 && b != 0.0 {
            us += (a as f64).powi(2);
            vs += (b as f64).powi(2);
        }
    }
    2.0 / sketch_size as f64 * (us * norm_sq(v)).max(norm_sq(u) * vs)
}
