use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core::{dot, invalid, l2_sq, norm_sq, Collection, Error, Result};
use crate::ivf::{kmeans_train, KMeansKind};
use crate::util::child_seed;

const INIT_ITERS: usize = 25;

/// L full-dimension codebooks of C codewords; a vector is approximated by
/// the sum of one codeword from each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AqCodebook {
    pub dim: usize,
    pub books: usize,
    pub codewords_per_book: usize,
    pub beam: usize,
    /// Layout [book][codeword][dim].
    pub codewords: Vec<f32>,
    /// Mean squared reconstruction error after initialization and each outer iteration.
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AqCode {
    pub codes: Vec<u32>,
    /// ‖u‖² of the encoded vector.
    pub norm_sq: f64,
}

impl AqCodebook {
    pub fn codeword(&self, i: usize, j: usize) -> &[f32] {
        let start = (i * self.codewords_per_book + j) * self.dim;
        &self.codewords[start..start + self.dim]
    }

    pub fn decode(&self, codes: &[u32]) -> Vec<f32> {
        let mut out = vec![0.0f64; self.dim];
        for (i, &j) in codes.iter().enumerate() {
            out.iter_mut().zip(self.codeword(i, j as usize)).for_each(|(a, &b)| *a += b as f64);
        }
        out.into_iter().map(|v| v as f32).collect()
    }

    fn error(&self, u: &[f32], codes: &[u32]) -> f64 {
        l2_sq(u, &self.decode(codes))
    }

    pub fn mse(&self, x: &Collection) -> f64 {
        let total: f64 = (0..x.len())
            .into_par_iter()
            .map(|i| {
                let u = x.row(i);
                self.error(u, &aq_encode(self, u, self.beam).codes)
            })
            .sum();
        total / x.len() as f64
    }

    /// Inner products of q with every codeword, L × C row-major.
    pub fn inner_product_tables(&self, q: &[f32]) -> Result<Vec<f64>> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        Ok((0..self.books)
            .flat_map(|i| (0..self.codewords_per_book).map(move |j| (i, j)))
            .map(|(i, j)| dot(q, self.codeword(i, j)))
            .collect())
    }
}

#[derive(Clone)]
struct Partial {
    codes: Vec<Option<u32>>,
    residual: Vec<f64>,
    error: f64,
}

/// Beam search over codeword choices: each round extends every partial
/// tuple with one codeword from an unused book and keeps the `beam` best.
pub fn aq_encode(cb: &AqCodebook, u: &[f32], beam: usize) -> AqCode {
    let beam = beam.max(1);
    let start =
        Partial { codes: vec![None; cb.books], residual: u.iter().map(|&v| v as f64).collect(), error: norm_sq(u) };
    let mut frontier = vec![start];
    for _ in 0..cb.books {
        let mut next: Vec<(f64, Vec<Option<u32>>, usize, usize)> = Vec::new();
        for (p, partial) in frontier.iter().enumerate() {
            for i in (0..cb.books).filter(|&i| partial.codes[i].is_none()) {
                for j in 0..cb.codewords_per_book {
                    let w = cb.codeword(i, j);
                    let err: f64 = partial.residual.iter().zip(w).map(|(r, &c)| (r - c as f64).powi(2)).sum();
                    let mut codes = partial.codes.clone();
                    codes[i] = Some(j as u32);
                    next.push((err, codes, p, i));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut seen = std::collections::HashSet::new();
        next.retain(|entry| seen.insert(entry.1.clone()));
        next.truncate(beam);
        frontier = next
            .into_iter()
            .map(|(error, codes, p, i)| {
                let w = cb.codeword(i, codes[i].expect("just set") as usize);
                let residual = frontier[p].residual.iter().zip(w).map(|(r, &c)| r - c as f64).collect();
                Partial { codes, residual, error }
            })
            .collect();
    }
    let best = frontier.into_iter().min_by(|a, b| a.error.total_cmp(&b.error)).expect("beam is non-empty");
    AqCode { codes: best.codes.into_iter().map(|c| c.expect("all books used")).collect(), norm_sq: norm_sq(u) }
}

/// Best code over all C^L tuples.
pub fn aq_exhaustive_encode(cb: &AqCodebook, u: &[f32]) -> AqCode {
    let total = cb.codewords_per_book.pow(cb.books as u32);
    let mut best = (f64::INFINITY, vec![0u32; cb.books]);
    for mut t in 0..total {
        let codes: Vec<u32> = (0..cb.books)
            .map(|_| {
                let j = t % cb.codewords_per_book;
                t /= cb.codewords_per_book;
                j as u32
            })
            .collect();
        let err = cb.error(u, &codes);
        if err < best.0 {
            best = (err, codes);
        }
    }
    AqCode { codes: best.1, norm_sq: norm_sq(u) }
}

/// ‖q‖² − 2 Σ ⟨q, μ_{i, code_i}⟩ + ‖u‖².
pub fn aq_distance(cb: &AqCodebook, tables: &[f64], q_norm_sq: f64, code: &AqCode) -> f64 {
    let ip: f64 = code.codes.iter().enumerate().map(|(i, &j)| tables[i * cb.codewords_per_book + j as usize]).sum();
    q_norm_sq - 2.0 * ip + code.norm_sq
}

/// Residual KMeans initialization, then alternating beam encoding (a code
/// only changes when the new one is strictly better) and a joint least-squares
/// refit of all codewords.
pub fn aq_train(x: &Collection, l: usize, c: usize, beam: usize, iters: usize, seed: u64) -> Result<AqCodebook> {
    if x.is_sparse() {
        return invalid("AQ needs a dense collection");
    }
    if l == 0 || beam == 0 || c == 0 || c > x.len() {
        return invalid("AQ needs L ≥ 1, B ≥ 1 and 1 ≤ C ≤ m");
    }
    let d = x.dim();
    let m = x.len();
    let mut residual: Vec<f32> = x.as_flat().expect("dense").to_vec();
    let mut codewords = Vec::with_capacity(l * c * d);
    for i in 0..l {
        let model = kmeans_train(
            &Collection::from_flat(d, residual.clone())?,
            c,
            KMeansKind::Euclidean,
            INIT_ITERS,
            child_seed(seed, i as u64),
        )?;
        for (row, &a) in residual.chunks_mut(d).zip(&model.assignment) {
            row.iter_mut().zip(model.centroid(a as usize)).for_each(|(r, &v)| *r -= v);
        }
        codewords.extend_from_slice(&model.centroids);
    }
    let mut cb = AqCodebook { dim: d, books: l, codewords_per_book: c, beam, codewords, objective: Vec::new() };
    let mut codes: Vec<Vec<u32>> = (0..m).map(|i| aq_encode(&cb, x.row(i), beam).codes).collect();
    let total = |cb: &AqCodebook, codes: &[Vec<u32>]| -> f64 {
        (0..m).into_par_iter().map(|i| cb.error(x.row(i), &codes[i])).sum::<f64>() / m as f64
    };
    cb.objective.push(total(&cb, &codes));
    for _ in 0..iters {
        refit(&mut cb, x, &codes)?;
        codes = (0..m)
            .into_par_iter()
            .map(|i| {
                let u = x.row(i);
                let fresh = aq_encode(&cb, u, beam).codes;
                if cb.error(u, &fresh) < cb.error(u, &codes[i]) {
                    fresh
                } else {
                    codes[i].clone()
                }
            })
            .collect();
        cb.objective.push(total(&cb, &codes));
    }
    Ok(cb)
}

/// Minimizes Σ ‖u − Σ_i μ_{i, code_i(u)}‖² over all codewords jointly. The
/// normal equations share one LC × LC Gram matrix across dimensions.
fn refit(cb: &mut AqCodebook, x: &Collection, codes: &[Vec<u32>]) -> Result<()> {
    let (l, c, d) = (cb.books, cb.codewords_per_book, cb.dim);
    let n = l * c;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, d);
    for (u, code) in x.rows().zip(codes) {
        let cols: Vec<usize> = code.iter().enumerate().map(|(i, &j)| i * c + j as usize).collect();
        for &a in &cols {
            for &b in &cols {
                gram[(a, b)] += 1.0;
            }
            for (k, &v) in u.iter().enumerate() {
                rhs[(a, k)] += v as f64;
            }
        }
    }
    let solved = gram
        .svd(true, true)
        .solve(&rhs, 1e-9)
        .map_err(|e| Error::InvalidParameter(format!("least-squares refit failed: {e}")))?;
    let before: Vec<f32> = cb.codewords.clone();
    for idx in 0..n {
        for k in 0..d {
            cb.codewords[idx * d + k] = solved[(idx, k)] as f32;
        }
    }
    // Rounding to f32 may cost a hair; keep the old codewords if the refit did not help.
    let error = |words: &[f32]| -> f64 {
        let probe = AqCodebook { codewords: words.to_vec(), ..cb.clone() };
        x.rows().zip(codes).map(|(u, code)| probe.error(u, code)).sum()
    };
    if error(&cb.codewords) > error(&before) {
        cb.codewords = before;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_vector_is_exact() {
        let cb = AqCodebook {
            dim: 2,
            books: 2,
            codewords_per_book: 2,
            beam: 2,
            codewords: vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            objective: vec![],
        };
        let u = [1.0f32, 1.0];
        let code = aq_encode(&cb, &u, 2);
        assert_eq!(code.codes, vec![1, 1]);
        assert_eq!(cb.decode(&code.codes), vec![1.0, 1.0]);
        let q = [0.5f32, -2.0];
        let t = cb.inner_product_tables(&q).unwrap();
        let got = aq_distance(&cb, &t, norm_sq(&q), &code);
        assert!((got - l2_sq(&q, &u)).abs() < 1e-12);
        let zero = cb.inner_product_tables(&[0.0, 0.0]).unwrap();
        assert_eq!(aq_distance(&cb, &zero, 0.0, &code), 2.0);
    }
}
