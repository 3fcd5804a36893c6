use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::core::{invalid, l2_sq, Collection, Error, Neighbor, Result, TopK, TopKResult};

/// Cover tree over true Euclidean distance.
///
/// Every inserted point `p` has a top level `level[p]` and is implicitly present
/// at every level below it. `children[p][ℓ]` lists the points whose top level is
/// `ℓ - 1` and whose parent is `p` at level `ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverTree {
    data: Collection,
    root: Option<u32>,
    top: i32,
    bottom: i32,
    level: Vec<Option<i32>>,
    parent: Vec<Option<u32>>,
    children: Vec<BTreeMap<i32, Vec<u32>>>,
    size: usize,
}

/// Outcome of an exact search plus the final candidate set it scanned.
#[derive(Clone, Debug)]
pub struct CoverTrace {
    pub result: TopKResult,
    pub final_candidates: Vec<u32>,
    pub distance_evals: usize,
}

#[inline]
fn radius(level: i32) -> f64 {
    2f64.powi(level)
}

/// Guards pruning tests against rounding in the triangle inequality.
#[inline]
fn slack(r: f64) -> f64 {
    r * (1.0 + 1e-9) + 1e-12
}

impl CoverTree {
    pub fn new(x: &Collection) -> Result<Self> {
        if x.is_sparse() {
            return invalid("cover tree needs dense vectors");
        }
        let m = x.len();
        Ok(CoverTree {
            data: x.clone(),
            root: None,
            top: 0,
            bottom: 0,
            level: vec![None; m],
            parent: vec![None; m],
            children: vec![BTreeMap::new(); m],
            size: 0,
        })
    }

    /// Inserts every point in id order.
    pub fn build(x: &Collection) -> Result<Self> {
        let mut t = Self::new(x)?;
        for id in 0..x.len() as u32 {
            t.insert(id)?;
        }
        Ok(t)
    }

    /// Inserts every point in id order, skipping exact duplicates.
    pub fn build_skipping_duplicates(x: &Collection) -> Result<(Self, Vec<u32>)> {
        let mut t = Self::new(x)?;
        let mut skipped = Vec::new();
        for id in 0..x.len() as u32 {
            match t.insert(id) {
                Ok(()) => {}
                Err(Error::Duplicate(_)) => skipped.push(id),
                Err(e) => return Err(e),
            }
        }
        Ok((t, skipped))
    }

    #[inline]
    fn dist(&self, a: u32, b: &[f32]) -> f64 {
        l2_sq(self.data.row(a as usize), b).sqrt()
    }

    fn children_at(&self, u: u32, level: i32) -> &[u32] {
        self.children[u as usize].get(&level).map_or(&[], |v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn root(&self) -> Option<u32> {
        self.root
    }

    pub fn top_level(&self) -> i32 {
        self.top
    }

    pub fn data(&self) -> &Collection {
        &self.data
    }

    /// Adds point `id` of the collection. Fails with [`Error::Duplicate`] if an
    /// identical point is already present.
    pub fn insert(&mut self, id: u32) -> Result<()> {
        let idx = id as usize;
        if idx >= self.data.len() {
            return invalid(format!("id {id} outside the collection"));
        }
        if self.level[idx].is_some() {
            return Err(Error::Duplicate(id));
        }
        let p = self.data.row(idx).to_vec();
        let Some(root) = self.root else {
            self.root = Some(id);
            self.level[idx] = Some(0);
            self.size = 1;
            return Ok(());
        };
        let d_root = self.dist(root, &p);
        if d_root == 0.0 {
            return Err(Error::Duplicate(root));
        }
        if self.size == 1 {
            self.top = d_root.log2().ceil() as i32;
            self.bottom = self.top;
        }
        while radius(self.top) < d_root {
            self.top += 1;
        }
        self.level[root as usize] = Some(self.top);

        // Descend, remembering each level's candidate set with distances.
        let mut stack: Vec<(i32, Vec<(u32, f64)>)> = vec![(self.top, vec![(root, d_root)])];
        loop {
            let (l, qs) = stack.last().expect("non-empty");
            let l = *l;
            let mut next: Vec<(u32, f64)> = Vec::new();
            let mut nearest = f64::INFINITY;
            for &(u, du) in qs {
                next.push((u, du));
                nearest = nearest.min(du);
                for &c in self.children_at(u, l) {
                    let dc = self.dist(c, &p);
                    next.push((c, dc));
                    nearest = nearest.min(dc);
                }
            }
            if let Some(&(dup, _)) = next.iter().find(|(_, d)| *d == 0.0) {
                return Err(Error::Duplicate(dup));
            }
            if nearest > radius(l) {
                break;
            }
            next.retain(|&(_, d)| d <= radius(l));
            stack.push((l - 1, next));
        }
        // The deepest level failed; attach at the first level above it that covers p.
        stack.pop();
        while let Some((l, qs)) = stack.pop() {
            let best =
                qs.iter().filter(|(_, d)| *d <= radius(l)).min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if let Some(&(u, _)) = best {
                self.children[u as usize].entry(l).or_default().push(id);
                self.level[idx] = Some(l - 1);
                self.parent[idx] = Some(u);
                self.bottom = self.bottom.min(l - 1);
                self.size += 1;
                return Ok(());
            }
        }
        unreachable!("the root level always covers the new point")
    }

    fn check_query(&self, q: &[f32]) -> Result<u32> {
        let root = self.root.ok_or(Error::EmptyIndex)?;
        if q.len() != self.data.dim() {
            return Err(Error::DimensionMismatch { expected: self.data.dim(), got: q.len() });
        }
        Ok(root)
    }

    /// Exact k-NN under squared L2 with the candidate set that survived pruning.
    pub fn search_traced(&self, q: &[f32], k: usize) -> Result<CoverTrace> {
        if k == 0 {
            return invalid("k must be at least 1");
        }
        let root = self.check_query(q)?;
        let mut evals = 1usize;
        let mut qs: Vec<(u32, f64)> = vec![(root, self.dist(root, q))];
        if self.size > 1 {
            for l in ((self.bottom + 1)..=self.top).rev() {
                let mut next = Vec::with_capacity(qs.len());
                for &(u, du) in &qs {
                    next.push((u, du));
                    for &c in self.children_at(u, l) {
                        next.push((c, self.dist(c, q)));
                        evals += 1;
                    }
                }
                let bound = if next.len() >= k {
                    let mut ds: Vec<f64> = next.iter().map(|p| p.1).collect();
                    let (_, kth, _) = ds.select_nth_unstable_by(k - 1, f64::total_cmp);
                    slack(*kth + radius(l))
                } else {
                    f64::INFINITY
                };
                next.retain(|&(_, d)| d <= bound);
                qs = next;
            }
        }
        let mut top = TopK::new(k);
        for &(u, _) in &qs {
            top.push(Neighbor::new(u, l2_sq(q, self.data.row(u as usize))));
        }
        Ok(CoverTrace {
            result: top.into_result(),
            final_candidates: qs.iter().map(|p| p.0).collect(),
            distance_evals: evals,
        })
    }

    pub fn search(&self, q: &[f32], k: usize) -> Result<TopKResult> {
        self.search_traced(q, k).map(|t| t.result)
    }

    /// Nearest neighbor within a factor (1 + eps) of the optimum in unsquared L2.
    /// The reported score is squared L2.
    pub fn search_approx(&self, q: &[f32], eps: f64) -> Result<Neighbor> {
        if eps <= 0.0 {
            return invalid("eps must be positive");
        }
        let root = self.check_query(q)?;
        let mut qs: Vec<(u32, f64)> = vec![(root, self.dist(root, q))];
        if self.size > 1 {
            for l in ((self.bottom + 1)..=self.top).rev() {
                let nearest = qs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                if nearest >= radius(l + 1) * (1.0 + 1.0 / eps) {
                    break;
                }
                let mut next = Vec::with_capacity(qs.len());
                for &(u, du) in &qs {
                    next.push((u, du));
                    for &c in self.children_at(u, l) {
                        next.push((c, self.dist(c, q)));
                    }
                }
                let nearest = next.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let bound = slack(nearest + radius(l));
                next.retain(|&(_, d)| d <= bound);
                qs = next;
            }
        }
        let best = qs
            .iter()
            .map(|&(u, _)| Neighbor::new(u, l2_sq(q, self.data.row(u as usize))))
            .min()
            .expect("candidate set never empties");
        Ok(best)
    }

    /// Full structural scan of nesting, covering and separation. Returns the
    /// first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let Some(root) = self.root else { return Ok(()) };
        let present: Vec<u32> = (0..self.data.len() as u32).filter(|&i| self.level[i as usize].is_some()).collect();
        if present.len() != self.size {
            return Err("size does not match inserted points".into());
        }
        for &p in &present {
            let lp = self.level[p as usize].unwrap();
            if p == root {
                if self.parent[p as usize].is_some() || (self.size > 1 && lp != self.top) {
                    return Err("root must sit at the top level without a parent".into());
                }
                continue;
            }
            let u = self.parent[p as usize].ok_or(format!("point {p} has no parent"))?;
            let lu = self.level[u as usize].ok_or(format!("parent of {p} missing"))?;
            // nesting: the parent must exist at level lp + 1
            if lu < lp + 1 {
                return Err(format!("parent {u} (top {lu}) absent at level {}", lp + 1));
            }
            if !self.children_at(u, lp + 1).contains(&p) {
                return Err(format!("child list of {u} lacks {p}"));
            }
            let d = self.dist(u, self.data.row(p as usize));
            if d > radius(lp + 1) {
                return Err(format!("covering: d({u},{p}) = {d} > 2^{}", lp + 1));
            }
        }
        for l in (self.bottom..=self.top).rev() {
            let level: Vec<u32> = present.iter().copied().filter(|&p| self.level[p as usize].unwrap() >= l).collect();
            for (i, &a) in level.iter().enumerate() {
                for &b in &level[i + 1..] {
                    let d = self.dist(a, self.data.row(b as usize));
                    if d <= radius(l) {
                        return Err(format!("separation at level {l}: d({a},{b}) = {d}"));
                    }
                }
            }
        }
        Ok(())
    }
}
