//! Seeded randomness and hashing helpers shared across index families.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words under a seed.
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |h, &w| mix64(h ^ mix64(w)))
}

/// Uniform value in [0, 1) derived from a hash.
#[inline]
pub fn hash_unit(seed: u64, words: &[u64]) -> f64 {
    (hash_words(seed, words) >> 11) as f64 / (1u64 << 53) as f64
}

/// Derives an independent child seed.
pub fn child_seed(seed: u64, tag: u64) -> u64 {
    hash_words(seed, &[tag, 0x5eed])
}

pub fn gaussian_vec(rng: &mut StdRng, d: usize) -> Vec<f32> {
    (0..d).map(|_| StandardNormal.sample(rng)).map(|x: f64| x as f32).collect()
}

/// Uniform direction on the unit sphere.
pub fn unit_direction(rng: &mut StdRng, d: usize) -> Vec<f32> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            return v.into_iter().map(|x| x as f32).collect();
        }
    }
}

pub fn permutation(rng: &mut StdRng, n: usize) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    p.shuffle(rng);
    p
}

/// Mean of each column of a dense row set.
pub fn centroid<'a>(rows: impl Iterator<Item = &'a [f32]>, d: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; d];
    let mut n = 0usize;
    for r in rows {
        for (a, &x) in acc.iter_mut().zip(r) {
            *a += x as f64;
        }
        n += 1;
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}
