use serde::{Deserialize, Serialize};

use super::error::{Error, Result};

/// A dense point in R^d with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(Vec<f32>);

impl DenseVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidVector("length must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVector("non-finite entry".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

/// A sparse point: strictly increasing coordinate ids with non-zero values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f32>,
    dim: usize,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidVector("dimension must be positive".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::InvalidVector("indices and values differ in length".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidVector("indices must be strictly increasing".into()));
        }
        if indices.last().is_some_and(|&i| i as usize >= dim) {
            return Err(Error::InvalidVector("index out of range".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::InvalidVector("values must be finite and non-zero".into()));
        }
        Ok(Self { indices, values, dim })
    }

    /// Keeps only the non-zero entries of a dense slice.
    pub fn from_dense(values: &[f32]) -> Result<Self> {
        let (indices, vals) =
            values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i as u32, *v)).unzip();
        Self::new(indices, vals, values.len())
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }
}

/// Owned vector of either density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Vector {
    Dense(DenseVector),
    Sparse(SparseVector),
}

impl Vector {
    pub fn dense(values: Vec<f32>) -> Result<Self> {
        DenseVector::new(values).map(Vector::Dense)
    }

    pub fn as_ref(&self) -> VectorRef<'_> {
        match self {
            Vector::Dense(v) => VectorRef::Dense(v.as_slice()),
            Vector::Sparse(s) => VectorRef::Sparse(s),
        }
    }

    pub fn dim(&self) -> usize {
        self.as_ref().dim()
    }
}

/// Borrowed view used by distance functions.
#[derive(Clone, Copy, Debug)]
pub enum VectorRef<'a> {
    Dense(&'a [f32]),
    Sparse(&'a SparseVector),
}

impl<'a> VectorRef<'a> {
    pub fn dim(&self) -> usize {
        match self {
            VectorRef::Dense(v) => v.len(),
            VectorRef::Sparse(s) => s.dim(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        let vals: &[f32] = match self {
            VectorRef::Dense(v) => v,
            VectorRef::Sparse(s) => s.values(),
        };
        vals.iter().map(|&x| x as f64 * x as f64).sum()
    }
}

impl<'a> From<&'a [f32]> for VectorRef<'a> {
    fn from(v: &'a [f32]) -> Self {
        VectorRef::Dense(v)
    }
}

impl<'a> From<&'a SparseVector> for VectorRef<'a> {
    fn from(v: &'a SparseVector) -> Self {
        VectorRef::Sparse(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Storage {
    Dense(Vec<f32>),
    Sparse(Vec<SparseVector>),
}

/// An immutable, homogeneous set of m ≥ 1 vectors addressed by ids 0..m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collection {
    dim: usize,
    len: usize,
    storage: Storage,
}

impl Collection {
    /// Builds a dense collection from a row-major buffer of `m * dim` values.
    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidVector("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyCollection);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVector("non-finite entry".into()));
        }
        Ok(Self { dim, len: data.len() / dim, storage: Storage::Dense(data) })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCollection)?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(dim, data)
    }

    pub fn from_sparse(rows: Vec<SparseVector>) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptyCollection)?.dim();
        if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.dim() });
        }
        Ok(Self { dim, len: rows.len(), storage: Storage::Sparse(rows) })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Dense row `i`.
    ///
    /// # Panics
    /// Panics on sparse collections.
    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        match &self.storage {
            Storage::Dense(data) => &data[i * self.dim..(i + 1) * self.dim],
            Storage::Sparse(_) => panic!("dense row requested from a sparse collection"),
        }
    }

    pub fn get(&self, i: usize) -> VectorRef<'_> {
        match &self.storage {
            Storage::Dense(_) => VectorRef::Dense(self.row(i)),
            Storage::Sparse(rows) => VectorRef::Sparse(&rows[i]),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> + '_ {
        (0..self.len).map(move |i| self.row(i))
    }

    /// Flat row-major buffer of a dense collection.
    pub fn as_flat(&self) -> Option<&[f32]> {
        match &self.storage {
            Storage::Dense(data) => Some(data),
            Storage::Sparse(_) => None,
        }
    }

    pub fn sparse_rows(&self) -> Option<&[SparseVector]> {
        match &self.storage {
            Storage::Sparse(rows) => Some(rows),
            Storage::Dense(_) => None,
        }
    }

    /// Dense copy of a collection of either density.
    pub fn to_dense(&self) -> Collection {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse(rows) => {
                let data = rows.iter().flat_map(|r| r.to_dense()).collect();
                Collection { dim: self.dim, len: self.len, storage: Storage::Dense(data) }
            }
        }
    }

    /// Dense sub-collection holding the given ids in order.
    pub fn subset(&self, ids: &[u32]) -> Result<Collection> {
        let rows: Vec<&[f32]> = ids.iter().map(|&i| self.row(i as usize)).collect();
        Collection::from_rows(&rows)
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.len).map(|i| self.get(i).norm_sq()).fold(0.0, f64::max).sqrt()
    }
}
