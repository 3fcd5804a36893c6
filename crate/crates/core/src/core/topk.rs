use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// A scored id. Ordered by (score, id) ascending.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u32,
    pub score: f64,
}

impl Neighbor {
    pub fn new(id: u32, score: f64) -> Self {
        Self { id, score }
    }
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Up to k neighbors sorted by non-decreasing score with unique ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub neighbors: Vec<Neighbor>,
    pub k: usize,
}

impl TopKResult {
    /// Sorts, removes repeated ids (keeping the best score) and truncates to k.
    pub fn from_unsorted(mut neighbors: Vec<Neighbor>, k: usize) -> Self {
        neighbors.sort_unstable();
        let mut seen = std::collections::HashSet::with_capacity(neighbors.len());
        neighbors.retain(|n| seen.insert(n.id));
        neighbors.truncate(k);
        Self { neighbors, k }
    }

    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|n| n.id).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.neighbors.iter().map(|n| n.score).collect()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn first(&self) -> Option<Neighbor> {
        self.neighbors.first().copied()
    }

    pub fn kth(&self) -> Option<Neighbor> {
        self.neighbors.last().copied()
    }
}

/// Bounded collector keeping the k smallest (score, id) pairs.
#[derive(Clone, Debug)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Neighbor>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    /// Offers a candidate; returns true if it entered the set.
    #[inline]
    pub fn push(&mut self, n: Neighbor) -> bool {
        if self.k == 0 {
            return false;
        }
        if self.heap.len() < self.k {
            self.heap.push(n);
            return true;
        }
        let worst = self.heap.peek().expect("non-empty heap");
        if n < *worst {
            self.heap.pop();
            self.heap.push(n);
            true
        } else {
            false
        }
    }

    /// Current k-th best score, or +inf while fewer than k are held.
    pub fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |n| n.score)
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    pub fn into_result(self) -> TopKResult {
        let k = self.k;
        TopKResult { neighbors: self.heap.into_sorted_vec(), k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_id() {
        let mut t = TopK::new(2);
        t.push(Neighbor::new(5, 1.0));
        t.push(Neighbor::new(3, 1.0));
        t.push(Neighbor::new(4, 1.0));
        assert_eq!(t.into_result().ids(), vec![3, 4]);
    }

    #[test]
    fn dedup_keeps_best() {
        let r = TopKResult::from_unsorted(vec![Neighbor::new(1, 2.0), Neighbor::new(1, 0.5), Neighbor::new(2, 1.0)], 5);
        assert_eq!(r.ids(), vec![1, 2]);
        assert_eq!(r.scores(), vec![0.5, 1.0]);
    }
}
