use rayon::prelude::*;

use super::distance::DistanceKind;
use super::error::{Error, Result};
use super::topk::{Neighbor, TopK, TopKResult};
use super::vector::{Collection, VectorRef};

/// Exact top-k by exhaustive scan, ties broken by smaller id.
pub fn brute_force_topk<'a>(
    x: &Collection,
    q: impl Into<VectorRef<'a>>,
    k: usize,
    kind: DistanceKind,
) -> Result<TopKResult> {
    let q = q.into();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if q.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: q.dim() });
    }
    let mut top = TopK::new(k);
    match (q, x.is_sparse()) {
        (VectorRef::Dense(qd), false) if kind != DistanceKind::Angular => {
            for (i, row) in x.rows().enumerate() {
                top.push(Neighbor::new(i as u32, kind.dense(qd, row)));
            }
        }
        _ => {
            for i in 0..x.len() {
                top.push(Neighbor::new(i as u32, kind.distance(q, x.get(i))?));
            }
        }
    }
    Ok(top.into_result())
}

/// Exact top-k restricted to a candidate id list, deduplicated.
pub fn rescore(x: &Collection, q: &[f32], ids: &[u32], k: usize, kind: DistanceKind) -> TopKResult {
    let mut top = TopK::new(k);
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for &id in ids {
        if seen.insert(id) {
            top.push(Neighbor::new(id, kind.dense(q, x.row(id as usize))));
        }
    }
    top.into_result()
}

/// Ground truth for a batch of dense queries, computed in parallel.
pub fn ground_truth(x: &Collection, queries: &Collection, k: usize, kind: DistanceKind) -> Result<Vec<TopKResult>> {
    (0..queries.len()).into_par_iter().map(|i| brute_force_topk(x, queries.get(i), k, kind)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let x = Collection::from_rows(&[[5.0f32, 5.0]]).unwrap();
        let r = brute_force_topk(&x, &[0.0f32, 0.0][..], 1, DistanceKind::L2Squared).unwrap();
        assert_eq!(r.ids(), vec![0]);
    }

    #[test]
    fn hand_enumerated_pair() {
        let x = Collection::from_rows(&[[0.0f32, 0.0], [1.0, 0.0], [0.0, 2.0]]).unwrap();
        let r = brute_force_topk(&x, &[0.9f32, 0.0][..], 2, DistanceKind::L2Squared).unwrap();
        assert_eq!(r.ids(), vec![1, 0]);
        let s = r.scores();
        assert!((s[0] - 0.01).abs() < 1e-6 && (s[1] - 0.81).abs() < 1e-6);
    }

    #[test]
    fn k_larger_than_m_truncates() {
        let x = Collection::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        let r = brute_force_topk(&x, &[0.0f32][..], 10, DistanceKind::L2Squared).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.k, 10);
    }

    #[test]
    fn angular_zero_query_rejected() {
        let x = Collection::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let r = brute_force_topk(&x, &[0.0f32, 0.0][..], 1, DistanceKind::Angular);
        assert_eq!(r, Err(Error::ZeroVector));
    }
}
