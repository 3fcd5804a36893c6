use rand::Rng;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use crate::core::{invalid, rescore, Collection, DistanceKind, Error, Neighbor, Result, TopK, TopKResult};
use crate::util::rng;

/// Per-dimension alias tables over |u_t| and the column sums Σ_u |u_t|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeIndex {
    pub dim: usize,
    pub len: usize,
    pub column_sums: Vec<f64>,
    /// None for dimensions whose column is entirely zero.
    pub columns: Vec<Option<AliasTable>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WedgeAnswer {
    pub result: TopKResult,
    /// Signed count per id.
    pub counts: Vec<i64>,
}

impl WedgeIndex {
    pub fn build(x: &Collection) -> Result<Self> {
        if x.is_sparse() {
            return invalid("wedge sampling needs a dense collection");
        }
        let d = x.dim();
        let mut column_sums = vec![0.0; d];
        let mut columns = Vec::with_capacity(d);
        for t in 0..d {
            let weights: Vec<f64> = x.rows().map(|u| (u[t] as f64).abs()).collect();
            column_sums[t] = weights.iter().sum();
            columns.push(if column_sums[t] > 0.0 { Some(AliasTable::new(&weights)?) } else { None });
        }
        Ok(Self { dim: d, len: x.len(), column_sums, columns })
    }

    /// Dimension distribution P[t | q] ∝ |q_t| Σ_u |u_t| and its normalizer N.
    pub fn dimension_table(&self, q: &[f32]) -> Result<AliasTable> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        let weights: Vec<f64> = q.iter().zip(&self.column_sums).map(|(&a, &c)| (a as f64).abs() * c).collect();
        if weights.iter().all(|&w| w == 0.0) {
            return invalid("query has no mass on the indexed dimensions");
        }
        AliasTable::new(&weights)
    }

    /// Signed counts after S draws: each draw picks t, then u ∝ |u_t|, and
    /// adds sign(q_t u_t) to u's bin.
    pub fn signed_counts<R: Rng + ?Sized>(
        &self,
        x: &Collection,
        q: &[f32],
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<i64>> {
        let dims = self.dimension_table(q)?;
        let mut counts = vec![0i64; self.len];
        for _ in 0..samples {
            let t = dims.sample(rng);
            let column = self.columns[t].as_ref().expect("zero columns carry no weight");
            let u = column.sample(rng);
            let product = q[t] * x.row(u)[t];
            counts[u] += if product > 0.0 { 1 } else { -1 };
        }
        Ok(counts)
    }

    /// Samples, keeps the k′ largest counts, re-scores them exactly and returns the top k.
    pub fn search(
        &self,
        x: &Collection,
        q: &[f32],
        samples: usize,
        k: usize,
        k_prime: Option<usize>,
        seed: u64,
    ) -> Result<WedgeAnswer> {
        if samples == 0 || k == 0 {
            return invalid("S and k must be positive");
        }
        let k_prime = k_prime.unwrap_or((10 * k).max(50)).min(self.len);
        if k_prime < k.min(self.len) {
            return invalid("k′ must be at least k");
        }
        let counts = self.signed_counts(x, q, samples, &mut rng(seed))?;
        let mut top = TopK::new(k_prime);
        for (id, &c) in counts.iter().enumerate() {
            top.push(Neighbor::new(id as u32, -(c as f64)));
        }
        let result = rescore(x, q, &top.into_result().ids(), k, DistanceKind::NegInnerProduct);
        Ok(WedgeAnswer { result, counts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_query_coordinate_is_never_sampled() {
        let x = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        let index = WedgeIndex::build(&x).unwrap();
        let dims = index.dimension_table(&[1.0, 0.0]).unwrap();
        assert_eq!(dims.probability(1), 0.0);
        let counts = index.signed_counts(&x, &[1.0, 0.0], 1000, &mut rng(3)).unwrap();
        assert_eq!(counts, vec![1000, 0]);
        assert!(index.dimension_table(&[0.0, 0.0]).is_err());
    }
}
