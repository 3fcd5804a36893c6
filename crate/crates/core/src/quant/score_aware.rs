use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{invalid, norm_sq, Collection, Error, Neighbor, Result};
use crate::ivf::{kmeans_train, KMeansKind};

/// Splits u − ũ into components parallel and orthogonal to u.
pub fn residual_decompose(u: &[f32], approx: &[f32]) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.len() != approx.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: approx.len() });
    }
    let n = norm_sq(u);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let r: Vec<f64> = u.iter().zip(approx).map(|(&a, &b)| a as f64 - b as f64).collect();
    let c = r.iter().zip(u).map(|(a, &b)| a * b as f64).sum::<f64>() / n;
    let par: Vec<f64> = u.iter().map(|&a| c * a as f64).collect();
    let perp = r.iter().zip(&par).map(|(a, b)| a - b).collect();
    Ok((par, perp))
}

/// η(θ, t) = (θ/t)² / (1 − (θ/t)²).
pub fn score_aware_weight(theta: f64, t: f64) -> Result<f64> {
    if !(0.0..t).contains(&theta) {
        return invalid(format!("need 0 ≤ θ < t, got θ = {theta}, t = {t}"));
    }
    let s = (theta / t).powi(2);
    Ok(s / (1.0 - s))
}

/// η ‖r_∥‖² + ‖r_⊥‖².
pub fn score_aware_loss(u: &[f32], approx: &[f32], eta: f64) -> Result<f64> {
    let (par, perp) = residual_decompose(u, approx)?;
    Ok(eta * par.iter().map(|v| v * v).sum::<f64>() + perp.iter().map(|v| v * v).sum::<f64>())
}

/// Codebook trained on the anisotropic loss. Each point's parallel weight is
/// `scale · η(θ, ‖u‖)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreAwareVq {
    pub dim: usize,
    pub codewords: Vec<f32>,
    pub theta: f64,
    pub scale: f64,
    /// Summed loss after initialization and after each iteration.
    pub objective: Vec<f64>,
}

impl ScoreAwareVq {
    pub fn len(&self) -> usize {
        self.codewords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, j: usize) -> &[f32] {
        &self.codewords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn eta(&self, u: &[f32]) -> Result<f64> {
        let t = norm_sq(u).sqrt();
        if t <= self.theta {
            return Ok(1.0);
        }
        Ok(self.scale * score_aware_weight(self.theta, t)?)
    }

    /// Codeword minimizing the weighted loss for `u`.
    pub fn encode(&self, u: &[f32]) -> Result<u32> {
        let eta = self.eta(u)?;
        let w = Weighted::new(u, eta, true);
        Ok((0..self.len()).map(|j| Neighbor::new(j as u32, w.loss(self.codeword(j)))).min().map_or(0, |n| n.id))
    }
}

/// Loss ‖u − c‖² + (η − 1)⟨u − c, û⟩², expanded for fast evaluation.
struct Weighted {
    u: Vec<f64>,
    unit: Vec<f64>,
    eta: f64,
    active: bool,
}

impl Weighted {
    fn new(u: &[f32], eta: f64, active: bool) -> Self {
        let u: Vec<f64> = u.iter().map(|&v| v as f64).collect();
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit = u.iter().map(|v| if n > 0.0 { v / n } else { 0.0 }).collect();
        Self { u, unit, eta, active }
    }

    fn loss(&self, c: &[f32]) -> f64 {
        let (mut sq, mut along) = (0.0, 0.0);
        for ((a, h), &b) in self.u.iter().zip(&self.unit).zip(c) {
            let r = a - b as f64;
            sq += r * r;
            along += r * h;
        }
        sq + (self.eta - 1.0) * along * along
    }
}

/// Modified Lloyd iterations: assignment by the weighted loss, then the exact
/// per-cluster minimizer, which solves (Σ I + (η−1) û ûᵀ) c = Σ η u.
pub fn score_aware_vq_train(
    x: &Collection,
    c: usize,
    theta: f64,
    scale: f64,
    iters: usize,
    seed: u64,
) -> Result<ScoreAwareVq> {
    if scale.is_nan() || scale <= 0.0 {
        return invalid("weight scale must be positive");
    }
    let d = x.dim();
    let init = kmeans_train(x, c, KMeansKind::Euclidean, 25, seed)?;
    let points: Vec<Weighted> = x
        .rows()
        .map(|u| {
            let t = norm_sq(u).sqrt();
            if t <= theta {
                return Ok(Weighted::new(u, 1.0, false));
            }
            Ok(Weighted::new(u, scale * score_aware_weight(theta, t)?, true))
        })
        .collect::<Result<_>>()?;
    let mut model = ScoreAwareVq { dim: d, codewords: init.centroids, theta, scale, objective: Vec::new() };
    let assign = |model: &ScoreAwareVq| -> Vec<(u32, f64)> {
        points
            .par_iter()
            .map(|p| {
                let best =
                    (0..model.len()).map(|j| Neighbor::new(j as u32, p.loss(model.codeword(j)))).min().expect("c ≥ 1");
                (best.id, best.score)
            })
            .collect()
    };
    let active_loss = |assignment: &[(u32, f64)]| -> f64 {
        points.iter().zip(assignment).filter(|(p, _)| p.active).map(|(_, a)| a.1).sum()
    };
    let mut assignment = assign(&model);
    model.objective.push(active_loss(&assignment));
    for _ in 0..iters {
        let updated: Vec<Option<Vec<f32>>> = (0..c)
            .into_par_iter()
            .map(|j| {
                let all: Vec<&Weighted> =
                    points.iter().zip(&assignment).filter(|(_, a)| a.0 == j as u32).map(|(p, _)| p).collect();
                let active: Vec<&Weighted> = all.iter().copied().filter(|p| p.active).collect();
                let members = if active.is_empty() { all } else { active };
                if members.is_empty() {
                    return None;
                }
                let mut lhs = DMatrix::<f64>::identity(d, d) * members.len() as f64;
                let mut rhs = DVector::<f64>::zeros(d);
                for p in members {
                    let h = DVector::from_column_slice(&p.unit);
                    lhs += (p.eta - 1.0) * &h * h.transpose();
                    rhs += p.eta * DVector::from_column_slice(&p.u);
                }
                let sol = lhs.svd(true, true).solve(&rhs, 1e-12).ok()?;
                Some(sol.iter().map(|&v| v as f32).collect())
            })
            .collect();
        let previous = model.codewords.clone();
        for (j, word) in updated.into_iter().enumerate() {
            if let Some(word) = word {
                model.codewords[j * d..(j + 1) * d].copy_from_slice(&word);
            }
        }
        let held: f64 = points
            .iter()
            .zip(&assignment)
            .filter(|(p, _)| p.active)
            .map(|(p, a)| p.loss(model.codeword(a.0 as usize)))
            .sum();
        // The f32 rounding of an exact minimizer can lose to the old codeword by a hair.
        if held > active_loss(&assignment) {
            model.codewords = previous;
        }
        assignment = assign(&model);
        model.objective.push(active_loss(&assignment));
    }
    Ok(model)
}
