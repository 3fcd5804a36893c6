use std::collections::HashSet;

use super::error::{Error, Result};
use super::topk::TopKResult;

/// |S ∩ S̃| / k over the first k entries of each result.
pub fn recall(exact: &TopKResult, approx: &TopKResult, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let truth: HashSet<u32> = exact.neighbors.iter().take(k).map(|n| n.id).collect();
    let hits = approx.neighbors.iter().take(k).filter(|n| truth.contains(&n.id)).count();
    hits as f64 / k as f64
}

/// Whether a candidate distance is within (1 + eps) of the exact k-th distance.
pub fn epsilon_valid(exact_kth_score: f64, candidate_score: f64, eps: f64) -> Result<bool> {
    if exact_kth_score < 0.0 || candidate_score < 0.0 {
        return Err(Error::InvalidParameter("scores must be non-negative distances".into()));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    Ok(candidate_score <= (1.0 + eps) * exact_kth_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::topk::Neighbor;

    fn res(ids: &[u32]) -> TopKResult {
        TopKResult {
            neighbors: ids.iter().enumerate().map(|(i, &id)| Neighbor::new(id, i as f64)).collect(),
            k: ids.len(),
        }
    }

    #[test]
    fn recall_cases() {
        assert_eq!(recall(&res(&[1, 2, 3, 4, 5]), &res(&[5, 4, 3, 2, 1]), 5), 1.0);
        assert_eq!(recall(&res(&[1, 2]), &res(&[3, 4]), 2), 0.0);
        assert_eq!(recall(&res(&[1, 2]), &res(&[2, 9]), 2), 0.5);
    }

    #[test]
    fn epsilon_cases() {
        assert!(epsilon_valid(1.0, 1.05, 0.1).unwrap());
        assert!(!epsilon_valid(1.0, 1.2, 0.1).unwrap());
        assert!(epsilon_valid(0.0, 0.0, 0.1).unwrap());
        assert!(epsilon_valid(-1.0, 0.0, 0.1).is_err());
    }
}
