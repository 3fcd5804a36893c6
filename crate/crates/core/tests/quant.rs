use annkit::core::{brute_force_topk, dot, ground_truth, l2_sq, norm_sq, recall, Collection, DistanceKind};
use annkit::ivf::{ivf_search, IvfIndex, KMeansKind};
use annkit::quant::*;
use annkit::util::{gaussian_vec, rng, unit_direction};
use rand::Rng;

fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
    let mut r = rng(seed);
    let rows: Vec<Vec<f32>> = (0..m).map(|_| gaussian_vec(&mut r, d)).collect();
    Collection::from_rows(&rows).unwrap()
}

/// Rows whose coordinates come in strongly correlated pairs split across PQ chunks.
fn correlated(m: usize, d: usize, seed: u64) -> Collection {
    let mut r = rng(seed);
    let half = d / 2;
    let rows: Vec<Vec<f32>> = (0..m)
        .map(|_| {
            let z = gaussian_vec(&mut r, d);
            let mut u = vec![0.0f32; d];
            for i in 0..half {
                u[i] = 3.0 * z[i];
                u[i + half] = 3.0 * z[i] + 0.3 * z[i + half];
            }
            u
        })
        .collect();
    Collection::from_rows(&rows).unwrap()
}

fn mse(x: &Collection, f: impl Fn(&[f32]) -> Vec<f32>) -> f64 {
    x.rows().map(|u| l2_sq(u, &f(u))).sum::<f64>() / x.len() as f64
}

#[test]
fn vq_limits() {
    let x = gaussian(40, 3, 1);
    let full = vq_train(&x, 40, 50, 2).unwrap();
    assert!(full.mse(&x) < 1e-12);
    let one = vq_train(&x, 1, 50, 2).unwrap();
    let mean: Vec<f64> = (0..3).map(|j| x.rows().map(|r| r[j] as f64).sum::<f64>() / 40.0).collect();
    for u in x.rows() {
        assert_eq!(vq_encode(&one, u), 0);
    }
    for (a, b) in vq_decode(&one, 0).iter().zip(&mean) {
        assert!((*a as f64 - b).abs() < 1e-6);
    }
}

#[test]
fn vq_error_shrinks_with_codebook_size() {
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..5 {
        let x = gaussian(1000, 8, 10 + seed);
        small += vq_train(&x, 16, 30, seed).unwrap().mse(&x);
        large += vq_train(&x, 64, 30, seed).unwrap().mse(&x);
    }
    assert!(small >= large);
}

#[test]
fn single_subspace_pq_is_vq() {
    let x = gaussian(300, 6, 3);
    let pq = pq_train(&x, 1, 16, 30, 0).unwrap();
    // Subspace i trains from child_seed(seed, i).
    let vq = vq_train(&x, 16, 30, annkit::util::child_seed(0, 0)).unwrap();
    for u in x.rows() {
        assert_eq!(pq_encode(&pq, u), vec![vq_encode(&vq, u)]);
        assert_eq!(pq_decode(&pq, &pq_encode(&pq, u)), vq_decode(&vq, vq_encode(&vq, u)).to_vec());
    }
}

#[test]
fn per_coordinate_codebook_is_lossless() {
    let mut r = rng(4);
    let rows: Vec<Vec<f32>> = (0..200).map(|_| (0..4).map(|_| r.random_range(0..3) as f32).collect()).collect();
    let x = Collection::from_rows(&rows).unwrap();
    let pq = pq_train(&x, 4, 3, 30, 5).unwrap();
    assert!(pq.mse(&x) < 1e-12);
    assert!(x.rows().all(|u| pq_encode(&pq, u).len() == 4));
}

#[test]
fn adc_identity_and_self_distance() {
    let x = gaussian(2000, 16, 6);
    let pq = pq_train(&x, 4, 32, 20, 7).unwrap();
    let mut r = rng(8);
    for _ in 0..1000 {
        let q = gaussian_vec(&mut r, 16);
        let code: Vec<u32> = (0..4).map(|_| r.random_range(0..32)).collect();
        let tables = pq_adc(&pq, &q).unwrap();
        let direct = l2_sq(&q, &pq_decode(&pq, &code));
        let adc = pq_adc_distance(&tables, &code);
        assert!((adc - direct).abs() <= 1e-5 * direct.max(1e-12));
        let own = pq_decode(&pq, &code);
        assert!(pq_adc_distance(&pq_adc(&pq, &own).unwrap(), &code).abs() < 1e-12);
    }
}

#[test]
fn opq_starts_as_pq_and_stays_orthogonal() {
    let x = correlated(1000, 8, 11);
    let pq = pq_train(&x, 2, 16, 25, 12).unwrap();
    let zero = opq_train(&x, 2, 16, 0, 12).unwrap();
    assert_eq!(zero.pq, pq);
    let model = opq_train(&x, 2, 16, 8, 12).unwrap();
    assert!(model.orthogonality.iter().all(|&e| e <= 1e-6));
    assert!(model.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", model.objective);
    let recon = mse(&x, |u| model.decode(&model.encode(u)));
    assert!((recon - model.mse(&x)).abs() <= 1e-3 * recon);
}

#[test]
fn opq_beats_pq_on_correlated_data() {
    let (mut plain, mut rotated) = (0.0, 0.0);
    for seed in 0..5 {
        let x = correlated(800, 8, 20 + seed);
        plain += pq_train(&x, 2, 16, 25, seed).unwrap().mse(&x);
        rotated += opq_train(&x, 2, 16, 10, seed).unwrap().mse(&x);
    }
    assert!(rotated <= plain, "opq {rotated} pq {plain}");
}

#[test]
fn aq_single_book_is_vq() {
    let x = gaussian(300, 5, 30);
    let aq = aq_train(&x, 1, 8, 1, 0, 31).unwrap();
    for u in x.rows() {
        let code = aq_encode(&aq, u, 1);
        let nearest = (0..8u32).min_by(|&a, &b| {
            l2_sq(u, aq.codeword(0, a as usize)).total_cmp(&l2_sq(u, aq.codeword(0, b as usize))).then(a.cmp(&b))
        });
        assert_eq!(code.codes, vec![nearest.unwrap()]);
    }
}

#[test]
fn aq_beam_versus_exhaustive() {
    let x = gaussian(400, 6, 32);
    let aq = aq_train(&x, 2, 4, 2, 3, 33).unwrap();
    for u in gaussian(200, 6, 34).rows() {
        let best = aq_exhaustive_encode(&aq, u);
        let best_err = l2_sq(u, &aq.decode(&best.codes));
        let narrow = l2_sq(u, &aq.decode(&aq_encode(&aq, u, 1).codes));
        let wide = l2_sq(u, &aq.decode(&aq_encode(&aq, u, 16).codes));
        assert!(narrow >= best_err - 1e-9);
        assert!((wide - best_err).abs() <= 1e-9);
    }
}

#[test]
fn aq_training_error_is_monotone() {
    let x = gaussian(500, 8, 35);
    let aq = aq_train(&x, 3, 8, 3, 6, 36).unwrap();
    assert!(aq.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", aq.objective);
}

#[test]
fn aq_distance_error_is_inner_product_gap() {
    let x = gaussian(300, 6, 37);
    let aq = aq_train(&x, 2, 8, 2, 2, 38).unwrap();
    let mut r = rng(39);
    for u in x.rows().take(100) {
        let q = gaussian_vec(&mut r, 6);
        let code = aq_encode(&aq, u, 2);
        let approx = aq.decode(&code.codes);
        let t = aq.inner_product_tables(&q).unwrap();
        let got = aq_distance(&aq, &t, norm_sq(&q), &code);
        let gap = 2.0 * (dot(&q, &approx) - dot(&q, u));
        assert!((got - l2_sq(&q, u) + gap).abs() < 1e-4 * (1.0 + got.abs()));
        let zero = aq.inner_product_tables(&[0.0; 6]).unwrap();
        assert_eq!(aq_distance(&aq, &zero, 0.0, &code), norm_sq(u));
    }
}

#[test]
fn residual_identities_on_random_pairs() {
    let mut r = rng(40);
    for _ in 0..500 {
        let u = gaussian_vec(&mut r, 7);
        let v = gaussian_vec(&mut r, 7);
        let (par, perp) = residual_decompose(&u, &v).unwrap();
        let cross: f64 = par.iter().zip(&perp).map(|(a, b)| a * b).sum();
        assert!(cross.abs() <= 1e-9);
        let total = l2_sq(&u, &v);
        let split: f64 = par.iter().chain(&perp).map(|a| a * a).sum();
        assert!((total - split).abs() <= 1e-9 * total.max(1.0));
        for i in 0..7 {
            assert!((par[i] + perp[i] - (u[i] as f64 - v[i] as f64)).abs() < 1e-9);
        }
    }
}

/// Recall@1 for MIPS when the points of the `probes` best codewords (by
/// inner product with the query) are re-scored exactly.
fn mips_recall(x: &Collection, queries: &Collection, codewords: &[Vec<f32>], codes: &[u32], probes: usize) -> f64 {
    let truth = ground_truth(x, queries, 1, DistanceKind::NegInnerProduct).unwrap();
    let mut hits = 0.0;
    for (q, t) in queries.rows().zip(&truth) {
        let mut order: Vec<(f64, u32)> = codewords.iter().enumerate().map(|(j, c)| (-dot(q, c), j as u32)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let chosen: Vec<u32> = order.iter().take(probes).map(|o| o.1).collect();
        let shortlist: Vec<u32> = (0..x.len() as u32).filter(|&i| chosen.contains(&codes[i as usize])).collect();
        let got = annkit::core::rescore(x, q, &shortlist, 1, DistanceKind::NegInnerProduct);
        hits += recall(t, &got, 1);
    }
    hits / queries.len() as f64
}

fn vq_recall(x: &Collection, queries: &Collection, vq: &VqCodebook, probes: usize) -> f64 {
    let words: Vec<Vec<f32>> = (0..vq.len()).map(|j| vq.codeword(j).to_vec()).collect();
    let codes: Vec<u32> = x.rows().map(|u| vq_encode(vq, u)).collect();
    mips_recall(x, queries, &words, &codes, probes)
}

fn aware_recall(x: &Collection, queries: &Collection, sa: &ScoreAwareVq, probes: usize) -> f64 {
    let words: Vec<Vec<f32>> = (0..sa.len()).map(|j| sa.codeword(j).to_vec()).collect();
    let codes: Vec<u32> = x.rows().map(|u| sa.encode(u).unwrap()).collect();
    mips_recall(x, queries, &words, &codes, probes)
}

/// Mixture of `centers` directions with angular noise and norms uniform in [lo, hi].
#[allow(clippy::too_many_arguments)]
fn clustered_norms(
    m: usize,
    d: usize,
    centers: usize,
    noise: f32,
    seed: u64,
    draw: u64,
    lo: f32,
    hi: f32,
) -> Collection {
    let mut r = rng(seed);
    let dirs: Vec<Vec<f32>> = (0..centers).map(|_| unit_direction(&mut r, d)).collect();
    let mut r = rng(seed ^ draw.wrapping_mul(0x9e37_79b9));
    let rows: Vec<Vec<f32>> = (0..m)
        .map(|_| {
            let c = &dirs[r.random_range(0..centers)];
            let z = gaussian_vec(&mut r, d);
            let v: Vec<f32> = c.iter().zip(&z).map(|(a, b)| a + noise * b).collect();
            let n = norm_sq(&v).sqrt() as f32;
            let s = if hi > lo { r.random_range(lo..hi) } else { lo };
            v.into_iter().map(|a| a / n * s).collect()
        })
        .collect();
    Collection::from_rows(&rows).unwrap()
}

#[test]
fn score_aware_beats_kmeans_on_mips() {
    let d = 16;
    let (mut plain, mut aware) = (0.0, 0.0);
    for seed in 0..5 {
        let x = clustered_norms(2000, d, 20, 0.25, 500 + seed, 1, 1.0, 3.0);
        let queries = clustered_norms(200, d, 20, 0.25, 500 + seed, 2, 1.0, 1.0);
        let vq = vq_train(&x, 64, 25, seed).unwrap();
        let sa = score_aware_vq_train(&x, 64, 0.9, (d - 1) as f64, 10, seed).unwrap();
        assert!(sa.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        plain += vq_recall(&x, &queries, &vq, 4);
        aware += aware_recall(&x, &queries, &sa, 4);
    }
    println!("mips recall@1 kmeans {:.3} score-aware {:.3}", plain / 5.0, aware / 5.0);
    assert!(aware > plain);
}

#[test]
fn ivfpq_stays_close_to_ivf() {
    let x = gaussian(5000, 32, 70);
    let queries = gaussian(100, 32, 71);
    let truth = ground_truth(&x, &queries, 10, DistanceKind::L2Squared).unwrap();
    let index = IvfPqIndex::build(&x, 71, 8, 64, 20, 72).unwrap();
    let ivf = IvfIndex::build(&x, Some(71), DistanceKind::L2Squared, KMeansKind::Euclidean, 20, 72).unwrap();
    let (mut base, mut quant) = (0.0, 0.0);
    for (q, t) in queries.rows().zip(&truth) {
        base += recall(t, &ivf_search(&ivf, &x, q, 10, 8).unwrap(), 10) / 100.0;
        quant += recall(t, &index.search(&x, q, 10, 8, Some(100)).unwrap(), 10) / 100.0;
    }
    assert!(quant >= base - 0.15, "ivfpq {quant} ivf {base}");
    let exact = brute_force_topk(&x, queries.row(0), 10, DistanceKind::L2Squared).unwrap();
    assert_eq!(index.search(&x, queries.row(0), 10, 71, Some(5000)).unwrap(), exact);
}
