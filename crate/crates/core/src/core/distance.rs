use serde::{Deserialize, Serialize};

use super::error::{Error, Result};
use super::vector::{SparseVector, VectorRef};

/// Dissimilarity kinds. Every kind is oriented so that smaller is more similar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceKind {
    L2Squared,
    Angular,
    NegInnerProduct,
    NegJaccard,
}

#[inline]
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

#[inline]
pub fn l2_sq(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let t = a as f64 - b as f64;
            t * t
        })
        .sum()
}

#[inline]
pub fn norm_sq(u: &[f32]) -> f64 {
    u.iter().map(|&a| a as f64 * a as f64).sum()
}

pub fn sparse_dot(u: &SparseVector, v: &SparseVector) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    let (ui, vi) = (u.indices(), v.indices());
    while i < ui.len() && j < vi.len() {
        match ui[i].cmp(&vi[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += u.values()[i] as f64 * v.values()[j] as f64;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub fn sparse_dense_dot(u: &SparseVector, v: &[f32]) -> f64 {
    u.indices().iter().zip(u.values()).map(|(&i, &x)| x as f64 * v[i as usize] as f64).sum()
}

fn dot_ref(u: VectorRef, v: VectorRef) -> f64 {
    match (u, v) {
        (VectorRef::Dense(a), VectorRef::Dense(b)) => dot(a, b),
        (VectorRef::Sparse(a), VectorRef::Sparse(b)) => sparse_dot(a, b),
        (VectorRef::Sparse(a), VectorRef::Dense(b)) | (VectorRef::Dense(b), VectorRef::Sparse(a)) => {
            sparse_dense_dot(a, b)
        }
    }
}

fn support(u: VectorRef) -> Vec<u32> {
    match u {
        VectorRef::Dense(a) => a.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, _)| i as u32).collect(),
        VectorRef::Sparse(s) => s.indices().to_vec(),
    }
}

fn jaccard_sets(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        // two empty supports are identical sets
        return 1.0;
    }
    inter as f64 / union as f64
}

impl DistanceKind {
    /// Checked distance between vectors of any density.
    pub fn distance<'a>(&self, u: impl Into<VectorRef<'a>>, v: impl Into<VectorRef<'a>>) -> Result<f64> {
        let (u, v) = (u.into(), v.into());
        if u.dim() != v.dim() {
            return Err(Error::DimensionMismatch { expected: u.dim(), got: v.dim() });
        }
        Ok(match self {
            DistanceKind::L2Squared => match (u, v) {
                (VectorRef::Dense(a), VectorRef::Dense(b)) => l2_sq(a, b),
                _ => (u.norm_sq() + v.norm_sq() - 2.0 * dot_ref(u, v)).max(0.0),
            },
            DistanceKind::Angular => {
                let (nu, nv) = (u.norm_sq(), v.norm_sq());
                if nu == 0.0 || nv == 0.0 {
                    return Err(Error::ZeroVector);
                }
                1.0 - dot_ref(u, v) / (nu.sqrt() * nv.sqrt())
            }
            DistanceKind::NegInnerProduct => -dot_ref(u, v),
            DistanceKind::NegJaccard => -jaccard_sets(&support(u), &support(v)),
        })
    }

    /// Unchecked dense distance for hot loops. Angular inputs must be non-zero.
    #[inline]
    pub fn dense(&self, u: &[f32], v: &[f32]) -> f64 {
        match self {
            DistanceKind::L2Squared => l2_sq(u, v),
            DistanceKind::NegInnerProduct => -dot(u, v),
            DistanceKind::Angular => {
                let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
                for (&a, &b) in u.iter().zip(v) {
                    let (a, b) = (a as f64, b as f64);
                    uv += a * b;
                    uu += a * a;
                    vv += b * b;
                }
                1.0 - uv / (uu.sqrt() * vv.sqrt())
            }
            DistanceKind::NegJaccard => -jaccard_sets(&support(VectorRef::Dense(u)), &support(VectorRef::Dense(v))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::L2Squared => "l2",
            DistanceKind::Angular => "angular",
            DistanceKind::NegInnerProduct => "ip",
            DistanceKind::NegJaccard => "jaccard",
        }
    }
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "l2squared" | "euclidean" => Ok(DistanceKind::L2Squared),
            "angular" | "cosine" => Ok(DistanceKind::Angular),
            "ip" | "mips" | "neginnerproduct" => Ok(DistanceKind::NegInnerProduct),
            "jaccard" | "negjaccard" => Ok(DistanceKind::NegJaccard),
            other => Err(Error::InvalidParameter(format!("unknown distance kind {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::vector::SparseVector;

    #[test]
    fn pythagorean_l2() {
        let d = DistanceKind::L2Squared.distance(&[0.0f32, 0.0][..], &[3.0f32, 4.0][..]).unwrap();
        assert_eq!(d, 25.0);
    }

    #[test]
    fn orthogonal_inner_product_is_zero() {
        let d = DistanceKind::NegInnerProduct.distance(&[1.0f32, 0.0][..], &[0.0f32, 1.0][..]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn jaccard_of_overlapping_supports() {
        let u = SparseVector::new(vec![1, 2], vec![1.0, 1.0], 4).unwrap();
        let v = SparseVector::new(vec![2, 3], vec![5.0, -2.0], 4).unwrap();
        let d = DistanceKind::NegJaccard.distance(&u, &v).unwrap();
        assert!((d + 1.0 / 3.0).abs() < 1e-15);
        let dense = DistanceKind::NegJaccard.dense(&u.to_dense(), &v.to_dense());
        assert_eq!(d, dense);
    }

    #[test]
    fn angular_rejects_zero() {
        let r = DistanceKind::Angular.distance(&[0.0f32, 0.0][..], &[1.0f32, 0.0][..]);
        assert_eq!(r, Err(Error::ZeroVector));
    }

    #[test]
    fn dimension_mismatch() {
        let r = DistanceKind::L2Squared.distance(&[0.0f32][..], &[1.0f32, 0.0][..]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let a = [0.0f32, 1.5, 0.0, -2.0];
        let b = [3.0f32, 0.5, 0.0, 1.0];
        let sa = SparseVector::from_dense(&a).unwrap();
        let sb = SparseVector::from_dense(&b).unwrap();
        for kind in [DistanceKind::L2Squared, DistanceKind::Angular, DistanceKind::NegInnerProduct] {
            let dd = kind.distance(&a[..], &b[..]).unwrap();
            let ss = kind.distance(&sa, &sb).unwrap();
            let sd = kind.distance(&sa, &b[..]).unwrap();
            assert!((dd - ss).abs() < 1e-12 && (dd - sd).abs() < 1e-12, "{kind:?}");
        }
    }
}
