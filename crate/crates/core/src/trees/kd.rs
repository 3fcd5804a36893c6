use serde::{Deserialize, Serialize};

use crate::core::{invalid, l2_sq, Collection, Neighbor, Result, TopK, TopKResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum KdNode {
    Split { axis: u32, value: f32, left: u32, right: u32 },
    Leaf { ids: Vec<u32> },
}

/// Axis-aligned median-split tree with exact backtracking search under L2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdTree {
    data: Collection,
    leaf_size: usize,
    nodes: Vec<KdNode>,
}

impl KdTree {
    /// Builds with leaf capacity `leaf_size`, cycling split axes by depth.
    pub fn build(x: &Collection, leaf_size: usize) -> Result<Self> {
        if leaf_size == 0 {
            return invalid("leaf size must be at least 1");
        }
        if x.is_sparse() {
            return invalid("k-d tree needs dense vectors");
        }
        let mut tree = KdTree { data: x.clone(), leaf_size, nodes: Vec::new() };
        let mut ids: Vec<u32> = (0..x.len() as u32).collect();
        tree.grow(&mut ids, 0);
        Ok(tree)
    }

    fn grow(&mut self, ids: &mut [u32], depth: usize) -> u32 {
        let slot = self.nodes.len() as u32;
        if ids.len() <= self.leaf_size {
            self.nodes.push(KdNode::Leaf { ids: ids.to_vec() });
            return slot;
        }
        let axis = depth % self.data.dim();
        let data = &self.data;
        ids.sort_unstable_by(|&a, &b| {
            let (va, vb) = (data.row(a as usize)[axis], data.row(b as usize)[axis]);
            va.total_cmp(&vb).then(a.cmp(&b))
        });
        let mid = (ids.len() - 1) / 2;
        let value = data.row(ids[mid] as usize)[axis];
        self.nodes.push(KdNode::Leaf { ids: Vec::new() });
        let (lo, hi) = ids.split_at_mut(mid + 1);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[slot as usize] = KdNode::Split { axis: axis as u32, value, left, right };
        slot
    }

    pub fn data(&self) -> &Collection {
        &self.data
    }

    pub fn nodes(&self) -> &[KdNode] {
        &self.nodes
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Longest root-to-leaf path counted in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[KdNode], i: u32) -> usize {
            match &nodes[i as usize] {
                KdNode::Leaf { .. } => 0,
                KdNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Exact k-NN under squared L2, identical to the exhaustive scan.
    pub fn search(&self, q: &[f32], k: usize) -> Result<TopKResult> {
        if k == 0 {
            return invalid("k must be at least 1");
        }
        if q.len() != self.data.dim() {
            return Err(crate::core::Error::DimensionMismatch { expected: self.data.dim(), got: q.len() });
        }
        let mut top = TopK::new(k);
        self.visit(0, q, &mut top);
        Ok(top.into_result())
    }

    fn visit(&self, node: u32, q: &[f32], top: &mut TopK) {
        match &self.nodes[node as usize] {
            KdNode::Leaf { ids } => {
                for &id in ids {
                    top.push(Neighbor::new(id, l2_sq(q, self.data.row(id as usize))));
                }
            }
            KdNode::Split { axis, value, left, right } => {
                let diff = q[*axis as usize] as f64 - *value as f64;
                let (near, far) = if diff <= 0.0 { (*left, *right) } else { (*right, *left) };
                self.visit(near, q, top);
                // equality may still tie on score and win on id
                if diff * diff <= top.bound() {
                    self.visit(far, q, top);
                }
            }
        }
    }
}
