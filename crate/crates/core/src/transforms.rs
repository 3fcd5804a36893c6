//! Rank-preserving lifts between inner-product, cosine and Euclidean retrieval.
//!
//! * [`mips_to_nn`] lifts data to `[u, ‖u‖²]` and queries to `[q, -1/2]`.
//!   Inner product over the lifted points ranks exactly like Euclidean
//!   distance over the originals, so a MIPS index answers NN queries.
//! * [`mips_to_mcs`] rescales data into the unit ball and appends
//!   `sqrt(1 - ‖u‖²)`; queries get a trailing zero. Lifted data are unit norm,
//!   so cosine and Euclidean rankings both match the original inner-product ranking.
//! * [`mips_to_nn_augmented`] appends a one-hot tail per data point instead
//!   of a shared coordinate, which makes pairwise lifted distances `2 - 2⟨u, v⟩`.

use serde::{Deserialize, Serialize};

use crate::core::{Collection, DistanceKind, Error, Result, SparseVector, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    MipsToNn,
    MipsToMcs,
    MipsToNnAugmented,
}

/// Paired data and query maps with the constants needed to apply them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformedPair {
    pub kind: TransformKind,
    /// Multiplier applied to data before lifting (1 / max norm, or 1).
    pub scale: f64,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Distance kind under which lifted points reproduce the source ranking.
    pub target_kind: DistanceKind,
    /// Number of data points, needed for the augmented tail.
    pub m: usize,
}

fn unit_scale(x: &Collection) -> f64 {
    let max = x.max_norm();
    if max > 0.0 {
        1.0 / max
    } else {
        1.0
    }
}

/// Lift for answering Euclidean NN with an inner-product index.
pub fn mips_to_nn(x: &Collection) -> TransformedPair {
    TransformedPair {
        kind: TransformKind::MipsToNn,
        scale: 1.0,
        input_dim: x.dim(),
        output_dim: x.dim() + 1,
        target_kind: DistanceKind::NegInnerProduct,
        m: x.len(),
    }
}

/// Lift onto the unit sphere so MIPS becomes cosine (and Euclidean) search.
pub fn mips_to_mcs(x: &Collection) -> TransformedPair {
    TransformedPair {
        kind: TransformKind::MipsToMcs,
        scale: unit_scale(x),
        input_dim: x.dim(),
        output_dim: x.dim() + 1,
        target_kind: DistanceKind::Angular,
        m: x.len(),
    }
}

/// Lift with a per-point one-hot tail so MIPS becomes Euclidean NN among data points.
pub fn mips_to_nn_augmented(x: &Collection) -> TransformedPair {
    TransformedPair {
        kind: TransformKind::MipsToNnAugmented,
        scale: unit_scale(x),
        input_dim: x.dim(),
        output_dim: x.dim() + x.len(),
        target_kind: DistanceKind::L2Squared,
        m: x.len(),
    }
}

impl TransformedPair {
    fn check(&self, u: &[f32]) -> Result<()> {
        if u.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: u.len() });
        }
        Ok(())
    }

    fn lifted_tail(&self, u: &[f32]) -> (Vec<f32>, f32) {
        let scaled: Vec<f32> = u.iter().map(|&x| (x as f64 * self.scale) as f32).collect();
        let n2: f64 = u.iter().map(|&x| x as f64 * x as f64).sum::<f64>() * self.scale * self.scale;
        (scaled, (1.0 - n2).max(0.0).sqrt() as f32)
    }

    /// Maps data point `id` with coordinates `u`.
    pub fn map_data(&self, id: usize, u: &[f32]) -> Result<Vector> {
        self.check(u)?;
        match self.kind {
            TransformKind::MipsToNn => {
                let mut out = u.to_vec();
                out.push(u.iter().map(|&x| x as f64 * x as f64).sum::<f64>() as f32);
                Vector::dense(out)
            }
            TransformKind::MipsToMcs => {
                let (mut out, tail) = self.lifted_tail(u);
                out.push(tail);
                Vector::dense(out)
            }
            TransformKind::MipsToNnAugmented => {
                if id >= self.m {
                    return Err(Error::InvalidParameter(format!("id {id} outside 0..{}", self.m)));
                }
                let (scaled, tail) = self.lifted_tail(u);
                let mut s = SparseVector::from_dense(&scaled)?;
                if tail != 0.0 {
                    let mut idx = s.indices().to_vec();
                    let mut val = s.values().to_vec();
                    idx.push((self.input_dim + id) as u32);
                    val.push(tail);
                    s = SparseVector::new(idx, val, self.output_dim)?;
                } else {
                    s = SparseVector::new(s.indices().to_vec(), s.values().to_vec(), self.output_dim)?;
                }
                Ok(Vector::Sparse(s))
            }
        }
    }

    pub fn map_query(&self, q: &[f32]) -> Result<Vector> {
        self.check(q)?;
        match self.kind {
            TransformKind::MipsToNn => {
                let mut out = q.to_vec();
                out.push(-0.5);
                Vector::dense(out)
            }
            TransformKind::MipsToMcs => {
                let mut out = q.to_vec();
                out.push(0.0);
                Vector::dense(out)
            }
            TransformKind::MipsToNnAugmented => {
                let s = SparseVector::from_dense(q)?;
                Ok(Vector::Sparse(SparseVector::new(s.indices().to_vec(), s.values().to_vec(), self.output_dim)?))
            }
        }
    }

    /// Lifts a whole collection. The augmented lift yields a sparse collection.
    pub fn apply(&self, x: &Collection) -> Result<Collection> {
        if x.len() != self.m || x.dim() != self.input_dim {
            return Err(Error::InvalidParameter("collection does not match transform".into()));
        }
        let x = x.to_dense();
        match self.kind {
            TransformKind::MipsToNnAugmented => {
                let rows = (0..x.len())
                    .map(|i| match self.map_data(i, x.row(i))? {
                        Vector::Sparse(s) => Ok(s),
                        Vector::Dense(_) => unreachable!("augmented lift is sparse"),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Collection::from_sparse(rows)
            }
            _ => {
                let mut data = Vec::with_capacity(x.len() * self.output_dim);
                for i in 0..x.len() {
                    match self.map_data(i, x.row(i))? {
                        Vector::Dense(v) => data.extend_from_slice(v.as_slice()),
                        Vector::Sparse(_) => unreachable!("dense lift"),
                    }
                }
                Collection::from_flat(self.output_dim, data)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{brute_force_topk, dot};

    fn dense(v: Vector) -> Vec<f32> {
        match v {
            Vector::Dense(d) => d.into_inner(),
            Vector::Sparse(s) => s.to_dense(),
        }
    }

    #[test]
    fn nn_lift_appends_squared_norm() {
        let x = Collection::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let t = mips_to_nn(&x);
        assert_eq!(dense(t.map_data(0, &[1.0, 0.0]).unwrap()), vec![1.0, 0.0, 1.0]);
        assert_eq!(dense(t.map_query(&[0.0, 0.0]).unwrap()), vec![0.0, 0.0, -0.5]);
    }

    #[test]
    fn nn_lift_two_points() {
        let x = Collection::from_rows(&[[1.0f32, 0.0], [2.0, 0.0]]).unwrap();
        let q = [1.0f32, 0.0];
        let t = mips_to_nn(&x);
        let lifted = t.apply(&x).unwrap();
        let lq = dense(t.map_query(&q).unwrap());
        let nn = brute_force_topk(&x, &q[..], 2, DistanceKind::L2Squared).unwrap();
        let mips = brute_force_topk(&lifted, &lq[..], 2, DistanceKind::NegInnerProduct).unwrap();
        assert_eq!(nn.ids(), vec![0, 1]);
        assert_eq!(mips.ids(), nn.ids());
        let raw = brute_force_topk(&x, &q[..], 1, DistanceKind::NegInnerProduct).unwrap();
        assert_eq!(raw.ids(), vec![1]);
    }

    #[test]
    fn zero_query_ranks_by_norm() {
        let x = Collection::from_rows(&[[3.0f32, 0.0], [1.0, 1.0], [0.5, 0.0]]).unwrap();
        let t = mips_to_nn(&x);
        let lifted = t.apply(&x).unwrap();
        let lq = dense(t.map_query(&[0.0, 0.0]).unwrap());
        let r = brute_force_topk(&lifted, &lq[..], 3, DistanceKind::NegInnerProduct).unwrap();
        assert_eq!(r.ids(), vec![2, 1, 0]);
        let l2 = brute_force_topk(&lifted, &lq[..], 3, DistanceKind::L2Squared).unwrap();
        assert_eq!(l2.ids(), vec![2, 1, 0]);
    }

    #[test]
    fn mcs_lift_examples() {
        let x = Collection::from_rows(&[[0.6f32, 0.0], [1.0, 0.0], [0.0, 0.0]]).unwrap();
        let t = mips_to_mcs(&x);
        assert_eq!(t.scale, 1.0);
        let u = dense(t.map_data(0, &[0.6, 0.0]).unwrap());
        assert!((u[2] - 0.8).abs() < 1e-6);
        let q = dense(t.map_query(&[1.0, 1.0]).unwrap());
        assert_eq!(q, vec![1.0, 1.0, 0.0]);
        assert!((dot(&u, &q) - 0.6).abs() < 1e-6);
        assert_eq!(dense(t.map_data(1, &[1.0, 0.0]).unwrap())[2], 0.0);
        assert_eq!(dense(t.map_data(2, &[0.0, 0.0]).unwrap()), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn augmented_pairwise_identity() {
        let x = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        let t = mips_to_nn_augmented(&x);
        let l = t.apply(&x).unwrap();
        let d = DistanceKind::L2Squared.distance(l.get(0), l.get(1)).unwrap();
        assert!((d - 2.0).abs() < 1e-6);
    }

    #[test]
    fn augmented_equal_vectors_distinct_tails() {
        // Same coordinates, norm 0.5 after scaling by the max norm of 1.
        let x = Collection::from_rows(&[[0.3f32, 0.4], [0.3, 0.4], [1.0, 0.0]]).unwrap();
        let t = mips_to_nn_augmented(&x);
        let l = t.apply(&x).unwrap();
        let d = DistanceKind::L2Squared.distance(l.get(0), l.get(1)).unwrap();
        // 0 + 2 (1 - 0.25) = 2 - 2 * 0.25
        assert!((d - 1.5).abs() < 1e-6, "{d}");
        assert_eq!(t.output_dim, 5);
    }
}
