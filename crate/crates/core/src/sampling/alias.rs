use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::{invalid, Result};

/// Vose's alias method: O(n) build, O(1) draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliasTable {
    cutoff: Vec<f64>,
    alias: Vec<u32>,
    total: f64,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and non-negative");
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return invalid("weights must not all be zero");
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut cutoff = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            cutoff[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers differ from 1 only by rounding.
        for i in small.into_iter().chain(large) {
            cutoff[i] = 1.0;
        }
        Ok(Self { cutoff, alias, total })
    }

    pub fn len(&self) -> usize {
        self.cutoff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cutoff.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Exact probability of drawing `i`.
    pub fn probability(&self, i: usize) -> f64 {
        let n = self.len() as f64;
        let own = self.cutoff[i];
        let borrowed: f64 =
            (0..self.len()).filter(|&j| self.alias[j] as usize == i && j != i).map(|j| 1.0 - self.cutoff[j]).sum();
        (own + borrowed) / n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.len());
        if rng.random::<f64>() < self.cutoff[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}
