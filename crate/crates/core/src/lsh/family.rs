use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::{dot, invalid, Error, Result};
use crate::util::{child_seed, gaussian_vec, rng};

/// Which locality-sensitive family to draw hash functions from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `h(u) = u_i` for a random coordinate of a binary vector.
    BitSampling,
    /// Sign of a Gaussian projection.
    Hyperplane,
    /// Closest signed basis vector after three Hadamard-sign rotations.
    CrossPolytope,
    /// `floor((<a, u> + b) / width)` with Gaussian `a` and `b ~ U[0, width]`.
    PStable { width: f64 },
}

/// A seeded family: function `i` is a pure function of `(kind, seed, dim, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashFamily {
    pub kind: FamilyKind,
    pub seed: u64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HashFunction {
    Bit { coord: u32 },
    Hyperplane { normal: Vec<f32> },
    CrossPolytope { padded: usize, signs: Vec<Vec<f32>> },
    PStable { a: Vec<f32>, offset: f64, width: f64 },
}

/// In-place unnormalized Walsh-Hadamard transform; `x.len()` must be a power of two.
pub fn fwht(x: &mut [f64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (x[j], x[j + h]);
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

impl HashFamily {
    pub fn new(kind: FamilyKind, seed: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if let FamilyKind::PStable { width } = kind {
            if !(width > 0.0 && width.is_finite()) {
                return invalid("bucket width must be positive");
            }
        }
        Ok(Self { kind, seed, dim })
    }

    /// The `index`-th function of the family.
    pub fn function(&self, index: u64) -> HashFunction {
        let mut r = rng(child_seed(self.seed, index));
        match self.kind {
            FamilyKind::BitSampling => HashFunction::Bit { coord: r.random_range(0..self.dim as u32) },
            FamilyKind::Hyperplane => HashFunction::Hyperplane { normal: gaussian_vec(&mut r, self.dim) },
            FamilyKind::CrossPolytope => {
                let padded = self.dim.next_power_of_two();
                let signs = (0..3)
                    .map(|_| (0..padded).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect())
                    .collect();
                HashFunction::CrossPolytope { padded, signs }
            }
            FamilyKind::PStable { width } => {
                let a = gaussian_vec(&mut r, self.dim);
                let offset = r.random_range(0.0..width);
                HashFunction::PStable { a, offset, width }
            }
        }
    }
}

impl HashFunction {
    /// Hash value. Cross-polytope returns `2 i + s` for basis index `i` and sign bit `s`.
    pub fn hash(&self, u: &[f32]) -> i64 {
        match self {
            HashFunction::Bit { coord } => (u[*coord as usize] != 0.0) as i64,
            HashFunction::Hyperplane { normal } => (dot(normal, u) >= 0.0) as i64,
            HashFunction::CrossPolytope { padded, signs } => {
                let mut x: Vec<f64> = u.iter().map(|&v| v as f64).collect();
                x.resize(*padded, 0.0);
                let scale = 1.0 / (*padded as f64).sqrt();
                for d in signs {
                    for (xi, &s) in x.iter_mut().zip(d) {
                        *xi *= s as f64;
                    }
                    fwht(&mut x);
                    x.iter_mut().for_each(|v| *v *= scale);
                }
                let (mut best, mut arg) = (-1.0, 0usize);
                for (i, v) in x.iter().enumerate() {
                    if v.abs() > best {
                        best = v.abs();
                        arg = i;
                    }
                }
                2 * arg as i64 + (x[arg] < 0.0) as i64
            }
            HashFunction::PStable { a, offset, width } => ((dot(a, u) + offset) / width).floor() as i64,
        }
    }
}

/// Bit sampling only accepts 0/1 coordinates.
pub(crate) fn check_input(kind: FamilyKind, dim: usize, u: &[f32]) -> Result<()> {
    if u.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
    }
    if kind == FamilyKind::BitSampling && u.iter().any(|&v| v != 0.0 && v != 1.0) {
        return invalid("bit sampling needs binary vectors");
    }
    Ok(())
}

/// Collision probability of sign random projections at angle `theta`.
pub fn hyperplane_collision(theta: f64) -> f64 {
    1.0 - theta / std::f64::consts::PI
}

/// Collision probability of bit sampling at Hamming distance `h` in dimension `d`.
pub fn bit_sampling_collision(h: usize, d: usize) -> f64 {
    1.0 - h as f64 / d as f64
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Collision probability of the Gaussian p-stable family with bucket `width`
/// for two points at Euclidean distance `x`, by numeric quadrature.
pub fn pstable_collision(x: f64, width: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let half_normal = |z: f64| (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp();
    integrate(|t| half_normal(t / x) / x * (1.0 - t / width), 0.0, width, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pstable_hand_value() {
        let h = HashFunction::PStable { a: vec![1.0, 0.0], offset: 0.8, width: 1.0 };
        assert_eq!(h.hash(&[0.3, 9.0]), 1);
    }

    #[test]
    fn hyperplane_antipodes_differ() {
        let fam = HashFamily::new(FamilyKind::Hyperplane, 3, 5).unwrap();
        let u = [0.3f32, -1.0, 2.0, 0.5, 0.1];
        let v: Vec<f32> = u.iter().map(|x| -x).collect();
        for i in 0..200 {
            let f = fam.function(i);
            assert_ne!(f.hash(&u), f.hash(&v));
        }
    }

    #[test]
    fn functions_are_pure() {
        for kind in [FamilyKind::Hyperplane, FamilyKind::CrossPolytope, FamilyKind::PStable { width: 2.0 }] {
            let fam = HashFamily::new(kind, 9, 6).unwrap();
            assert_eq!(fam.function(4), fam.function(4));
            assert_ne!(fam.function(4), fam.function(5));
        }
    }

    #[test]
    fn fwht_matches_matrix() {
        let mut x = vec![1.0, 2.0, 3.0, 4.0];
        fwht(&mut x);
        assert_eq!(x, vec![10.0, -2.0, -4.0, 0.0]);
    }

    #[test]
    fn cross_polytope_rotation_preserves_norm_and_identity() {
        let fam = HashFamily::new(FamilyKind::CrossPolytope, 1, 5).unwrap();
        let f = fam.function(0);
        let u = [0.5f32, -0.25, 1.0, 0.0, 0.75];
        let h = f.hash(&u);
        assert!((0..16).contains(&h));
        let scaled: Vec<f32> = u.iter().map(|x| 3.0 * x).collect();
        assert_eq!(h, f.hash(&scaled));
    }

    #[test]
    fn bit_sampling_rejects_non_binary() {
        assert!(check_input(FamilyKind::BitSampling, 2, &[0.0, 2.0]).is_err());
        assert!(check_input(FamilyKind::BitSampling, 2, &[0.0, 1.0]).is_ok());
    }

    #[test]
    fn quadrature_of_polynomial() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-9);
    }
}
