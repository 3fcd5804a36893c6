use std::collections::{BTreeSet, VecDeque};

use super::build::NeighborGraph;
use crate::core::{invalid, Collection, Neighbor, Result, TopKResult};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchTrace {
    /// Distance evaluations, entry included.
    pub visited: usize,
    /// Nodes whose neighborhoods were expanded.
    pub hops: usize,
    pub final_queue: Vec<Neighbor>,
    /// Best score in the queue after each hop.
    pub best_scores: Vec<f64>,
    /// Every evaluated id in evaluation order.
    pub visited_ids: Vec<u32>,
}

impl SearchTrace {
    pub fn is_monotone(&self) -> bool {
        self.best_scores.windows(2).all(|w| w[1] <= w[0])
    }
}

fn check_query(g: &NeighborGraph, x: &Collection, q: &[f32], k: usize, entry: u32) -> Result<()> {
    if g.len() != x.len() {
        return invalid("graph and collection sizes differ");
    }
    if entry as usize >= g.len() {
        return invalid("entry outside the graph");
    }
    if q.len() != x.dim() {
        return Err(crate::core::Error::DimensionMismatch { expected: x.dim(), got: q.len() });
    }
    if k == 0 {
        return invalid("k must be positive");
    }
    Ok(())
}

/// Best-first search with a visited set and a best-list of `beam` nodes.
/// Stops once every node on the list has been expanded.
pub fn greedy_search(
    g: &NeighborGraph,
    x: &Collection,
    q: &[f32],
    k: usize,
    entry: u32,
    beam: usize,
) -> Result<(TopKResult, SearchTrace)> {
    check_query(g, x, q, k, entry)?;
    if beam < k {
        return invalid("beam must be at least k");
    }
    let kind = g.kind();
    let mut seen = vec![false; g.len()];
    let mut trace = SearchTrace::default();
    let score = |id: u32| Neighbor::new(id, kind.dense(q, x.row(id as usize)));

    let mut list: Vec<(Neighbor, bool)> = vec![(score(entry), false)];
    seen[entry as usize] = true;
    trace.visited = 1;
    trace.visited_ids.push(entry);

    while let Some(pos) = list.iter().position(|(_, expanded)| !expanded) {
        list[pos].1 = true;
        let u = list[pos].0.id;
        trace.hops += 1;
        for &v in g.neighbors(u) {
            if std::mem::replace(&mut seen[v as usize], true) {
                continue;
            }
            trace.visited += 1;
            trace.visited_ids.push(v);
            let n = score(v);
            if list.len() >= beam && n >= list[list.len() - 1].0 {
                continue;
            }
            let at = list.partition_point(|(m, _)| *m < n);
            list.insert(at, (n, false));
            list.truncate(beam);
        }
        trace.best_scores.push(list[0].0.score);
    }
    debug_assert!(trace.is_monotone());
    trace.final_queue = list.iter().map(|(n, _)| *n).collect();
    let result = TopKResult::from_unsorted(trace.final_queue.clone(), k);
    Ok((result, trace))
}

/// The queue-stabilization loop taken literally: each round inserts the best
/// neighbor of the queue not already in it and drops the worst beyond k.
pub fn greedy_search_printed(
    g: &NeighborGraph,
    x: &Collection,
    q: &[f32],
    k: usize,
    entry: u32,
) -> Result<(TopKResult, SearchTrace)> {
    check_query(g, x, q, k, entry)?;
    let kind = g.kind();
    let score = |id: u32| Neighbor::new(id, kind.dense(q, x.row(id as usize)));
    let mut queue: BTreeSet<Neighbor> = BTreeSet::from([score(entry)]);
    let mut trace = SearchTrace { visited: 1, visited_ids: vec![entry], ..Default::default() };
    loop {
        trace.hops += 1;
        let members: BTreeSet<u32> = queue.iter().map(|n| n.id).collect();
        let best = members
            .iter()
            .flat_map(|&u| g.neighbors(u).iter().copied())
            .filter(|v| !members.contains(v))
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .map(|v| {
                trace.visited += 1;
                score(v)
            })
            .min();
        let Some(v) = best else { break };
        queue.insert(v);
        let mut changed = true;
        if queue.len() > k {
            let worst = queue.pop_last().expect("queue is non-empty");
            changed = worst != v;
        }
        trace.best_scores.push(queue.first().map_or(f64::INFINITY, |n| n.score));
        if !changed {
            break;
        }
    }
    trace.final_queue = queue.iter().copied().collect();
    let result = TopKResult::from_unsorted(trace.final_queue.clone(), k);
    Ok((result, trace))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connectivity {
    pub reachable: usize,
    pub unreachable: usize,
}

impl Connectivity {
    pub fn fraction(&self) -> f64 {
        let total = self.reachable + self.unreachable;
        if total == 0 {
            1.0
        } else {
            self.reachable as f64 / total as f64
        }
    }

    pub fn is_connected(&self) -> bool {
        self.unreachable == 0
    }
}

/// Breadth-first reachability from the entry node.
pub fn connectivity_check(g: &NeighborGraph) -> Connectivity {
    if g.is_empty() {
        return Connectivity { reachable: 0, unreachable: 0 };
    }
    let mut seen = vec![false; g.len()];
    let mut frontier = VecDeque::from([g.entry()]);
    seen[g.entry() as usize] = true;
    let mut reachable = 1;
    while let Some(u) = frontier.pop_front() {
        for &v in g.neighbors(u) {
            if !std::mem::replace(&mut seen[v as usize], true) {
                reachable += 1;
                frontier.push_back(v);
            }
        }
    }
    Connectivity { reachable, unreachable: g.len() - reachable }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{brute_force_topk, DistanceKind};
    use crate::graph::{build_alpha_sng_exact, build_knn_graph};
    use crate::util::{gaussian_vec, rng};

    fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
        let mut r = rng(seed);
        let rows: Vec<Vec<f32>> = (0..m).map(|_| gaussian_vec(&mut r, d)).collect();
        Collection::from_rows(&rows).unwrap()
    }

    fn complete(m: usize) -> Vec<Vec<u32>> {
        (0..m as u32).map(|u| (0..m as u32).filter(|&v| v != u).collect()).collect()
    }

    #[test]
    fn complete_graph_matches_oracle() {
        let x = gaussian(60, 5, 1);
        let g = NeighborGraph::from_adjacency(complete(60), 7, DistanceKind::L2Squared).unwrap();
        let q = gaussian(1, 5, 2);
        let (res, trace) = greedy_search(&g, &x, q.row(0), 10, 7, 10).unwrap();
        let exact = brute_force_topk(&x, q.row(0), 10, DistanceKind::L2Squared).unwrap();
        assert_eq!(res.ids(), exact.ids());
        assert!(trace.visited >= trace.hops);
        assert_eq!(trace.visited, 60);
        assert!(trace.is_monotone());
    }

    #[test]
    fn beam_of_one_matches_printed_loop() {
        let x = gaussian(200, 6, 3);
        let g = build_knn_graph(&x, 6, DistanceKind::L2Squared).unwrap();
        let queries = gaussian(50, 6, 4);
        for (i, q) in queries.rows().enumerate() {
            let entry = (i * 13 % 200) as u32;
            let (a, _) = greedy_search(&g, &x, q, 1, entry, 1).unwrap();
            let (b, _) = greedy_search_printed(&g, &x, q, 1, entry).unwrap();
            assert_eq!(a.ids(), b.ids());
        }
    }

    #[test]
    fn weak_optimality_on_small_sng() {
        let x = gaussian(80, 4, 5);
        let g = build_alpha_sng_exact(&x, 1.0, DistanceKind::L2Squared).unwrap();
        for u in 0..80u32 {
            for entry in (0..80u32).step_by(7) {
                let (res, _) = greedy_search(&g, &x, x.row(u as usize), 1, entry, 1).unwrap();
                assert_eq!(res.ids(), vec![u]);
            }
        }
    }

    #[test]
    fn connectivity_of_cliques() {
        let full = NeighborGraph::from_adjacency(complete(5), 0, DistanceKind::L2Squared).unwrap();
        assert_eq!(connectivity_check(&full).fraction(), 1.0);
        let split = vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4], vec![3]];
        let g = NeighborGraph::from_adjacency(split, 0, DistanceKind::L2Squared).unwrap();
        let c = connectivity_check(&g);
        assert_eq!((c.reachable, c.unreachable), (3, 2));
        assert!(c.fraction() < 1.0);
    }

    #[test]
    fn rejects_narrow_beam() {
        let x = gaussian(10, 2, 6);
        let g = NeighborGraph::from_adjacency(complete(10), 0, DistanceKind::L2Squared).unwrap();
        assert!(greedy_search(&g, &x, x.row(0), 3, 0, 2).is_err());
    }
}
