use crate::core::{invalid, rescore, Collection, DistanceKind, Error, Result, TopKResult};
use crate::util::{permutation, rng};

/// h(x) = min{(1+x)/(1+x/d), (x+x/d)/(1+x/d)}.
pub fn boundedme_h(x: f64, d: usize) -> f64 {
    let d = d as f64;
    let denom = 1.0 + x / d;
    ((1.0 + x) / denom).min((x + x / d) / denom)
}

/// Raw sample count of one round, before rounding up and clamping to d.
pub fn boundedme_sample_count(eps: f64, delta: f64, n: usize, k: usize, d: usize) -> f64 {
    let gap = (n - k) as f64;
    let x = 2.0 / (eps * eps) * (2.0 * gap / (delta * (((n - k) / 2) as f64 + 1.0))).ln();
    boundedme_h(x, d)
}

/// Normalized mean reward of every point: (1/d) Σ_t (q̂_t u_t / M + 1) / 2 with
/// q̂ = q/‖q‖∞ and M = max |u_t| over X.
pub fn normalized_means(x: &Collection, q: &[f32]) -> Result<Vec<f64>> {
    let (qn, _, m_abs) = normalization(x, q)?;
    let d = x.dim() as f64;
    Ok(x.rows().map(|u| 0.5 + dot_f64(&qn, u) / (2.0 * d * m_abs)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedMeRound {
    pub survivors_in: usize,
    pub eps: f64,
    pub delta: f64,
    pub samples: usize,
    pub threshold: f64,
    pub survivors_out: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedMeAnswer {
    pub result: TopKResult,
    pub rounds: Vec<BoundedMeRound>,
    /// Coordinate products computed across all rounds.
    pub work: usize,
    /// Query scale 1/‖q‖∞ and data scale M used by the normalization.
    pub query_scale: f64,
    pub data_scale: f64,
}

fn dot_f64(a: &[f64], u: &[f32]) -> f64 {
    a.iter().zip(u).map(|(&s, &v)| s * v as f64).sum()
}

fn normalization(x: &Collection, q: &[f32]) -> Result<(Vec<f64>, f64, f64)> {
    if x.is_sparse() {
        return invalid("BoundedME needs a dense collection");
    }
    if q.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: q.len() });
    }
    let q_inf = q.iter().fold(0.0f64, |a, &v| a.max((v as f64).abs()));
    let m_abs = x.as_flat().unwrap().iter().fold(0.0f64, |a, &v| a.max((v as f64).abs()));
    let q_scale = if q_inf > 0.0 { 1.0 / q_inf } else { 1.0 };
    let m_abs = if m_abs > 0.0 { m_abs } else { 1.0 };
    Ok((q.iter().map(|&v| v as f64 * q_scale).collect(), q_scale, m_abs))
}

/// Median elimination over sampled coordinates. Survivors are re-scored with
/// exact inner products; scores are negated inner products.
pub fn boundedme_topk(x: &Collection, q: &[f32], k: usize, eps: f64, delta: f64, seed: u64) -> Result<BoundedMeAnswer> {
    if k == 0 {
        return invalid("k must be positive");
    }
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0) {
        return invalid("need eps > 0 and 0 < delta < 1");
    }
    let (qn, q_scale, m_abs) = normalization(x, q)?;
    let d = x.dim();
    let order = permutation(&mut rng(seed), d);
    let mut alive: Vec<u32> = (0..x.len() as u32).collect();
    let mut acc = vec![0.0f64; x.len()];
    let mut sampled = vec![0usize; x.len()];
    let mut taken = 0usize;
    let (mut eps_i, mut delta_i) = (eps / 4.0, delta / 2.0);
    let mut rounds = Vec::new();
    let mut work = 0usize;

    while alive.len() > k {
        let n = alive.len();
        let want = boundedme_sample_count(eps_i, delta_i, n, k, d).ceil();
        let t_i = if want.is_finite() { (want.max(0.0) as usize).min(d) } else { d };
        let fresh = &order[taken..t_i.max(taken)];
        for &id in &alive {
            let u = x.row(id as usize);
            for &t in fresh {
                let t = t as usize;
                acc[id as usize] += (qn[t] * u[t] as f64 / m_abs + 1.0) / 2.0;
            }
            sampled[id as usize] += fresh.len();
            assert!(sampled[id as usize] <= d, "a dimension was sampled twice");
            work += fresh.len();
        }
        taken = taken.max(t_i);

        // Threshold at the ⌈(n−k)/2⌉-th smallest accumulator; strictly greater survive.
        let mut scores: Vec<f64> = alive.iter().map(|&id| acc[id as usize]).collect();
        scores.sort_by(f64::total_cmp);
        let threshold = scores[(n - k).div_ceil(2) - 1];
        let mut next: Vec<u32> = alive.iter().copied().filter(|&id| acc[id as usize] > threshold).collect();
        if next.len() < k {
            let mut tied: Vec<u32> = alive.iter().copied().filter(|&id| acc[id as usize] == threshold).collect();
            tied.sort_unstable();
            next.extend(tied.into_iter().take(k - next.len()));
            next.sort_unstable();
        }
        rounds.push(BoundedMeRound {
            survivors_in: n,
            eps: eps_i,
            delta: delta_i,
            samples: t_i,
            threshold,
            survivors_out: next.len(),
        });
        alive = next;
        eps_i *= 0.75;
        delta_i /= 2.0;
    }
    assert!(work <= x.len() * d, "work exceeded m·d");
    let result = rescore(x, q, &alive, k, DistanceKind::NegInnerProduct);
    Ok(BoundedMeAnswer { result, rounds, work, query_scale: q_scale, data_scale: m_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::brute_force_topk;

    #[test]
    fn h_landmarks() {
        // h(x) ≤ d and h(x) ≈ x for x ≪ d.
        assert!((boundedme_h(1e12, 64) - 64.0).abs() < 1e-6);
        let x: f64 = 0.5;
        let d: f64 = 1000.0;
        let expect = ((1.0 + x) / (1.0 + x / d)).min((x + x / d) / (1.0 + x / d));
        assert_eq!(boundedme_h(x, 1000), expect);
        assert!((boundedme_h(0.5, 1000) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn sample_count_arithmetic() {
        // n = 10, k = 2, eps = 0.5, delta = 0.1: x = 8 ln(16 / 0.5) = 8 ln 32.
        let x: f64 = 8.0 * 32f64.ln();
        let d: f64 = 100.0;
        let expect = ((1.0 + x) / (1.0 + x / d)).min((x + x / d) / (1.0 + x / d));
        assert!((boundedme_sample_count(0.5, 0.1, 10, 2, 100) - expect).abs() < 1e-12);
    }

    #[test]
    fn k_equal_m_returns_everything() {
        let x = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 2.0], [3.0, 1.0]]).unwrap();
        let a = boundedme_topk(&x, &[1.0, 1.0], 3, 0.1, 0.1, 0).unwrap();
        assert!(a.rounds.is_empty());
        assert_eq!(a.work, 0);
        assert_eq!(a.result.ids(), vec![2, 1, 0]);
    }

    #[test]
    fn tiny_dimension_is_exact() {
        let x = Collection::from_rows(&[[1.0f32, 0.5], [-1.0, 2.0], [3.0, 1.0], [0.2, 0.1], [2.0, 2.0]]).unwrap();
        let q = [0.7f32, -0.3];
        let a = boundedme_topk(&x, &q, 2, 0.1, 0.1, 4).unwrap();
        let truth = brute_force_topk(&x, q.as_slice(), 2, DistanceKind::NegInnerProduct).unwrap();
        assert_eq!(a.result.ids(), truth.ids());
        assert!(a.rounds.iter().all(|r| r.samples == 2));
    }
}
