use annkit::core::{Collection, DistanceKind};
use annkit::harness::{
    benchmark, build_artifact, experiment_coincidence, experiment_instability, generate, read_artifact, read_vecs,
    write_artifact, write_vecs, BenchConfig, BenchFamily, BuildParams, Distribution, QueryParams, SyntheticSpec,
};
use annkit::ivf::KMeansKind;
use annkit::util::{gaussian_vec, rng};
use rand::Rng;

fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
    generate(&SyntheticSpec::new(Distribution::GaussianStd, m, d, seed)).unwrap()
}

#[test]
fn generator_is_reproducible_and_has_unit_moments() {
    let spec = SyntheticSpec::new(Distribution::GaussianStd, 4, 2, 7);
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let x = generate(&SyntheticSpec::new(Distribution::GaussianStd, 100_000, 1, 3)).unwrap();
    let v = x.as_flat().unwrap();
    let n = v.len() as f64;
    let mean = v.iter().map(|&a| a as f64).sum::<f64>() / n;
    let var = v.iter().map(|&a| (a as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() <= 3.0 / n.sqrt());
    // Var of the sample variance of a standard normal is 2/(n−1).
    assert!((var - 1.0).abs() <= 3.0 * (2.0 / (n - 1.0)).sqrt());
    for dist in [Distribution::UniformCentered, Distribution::UniformPositive, Distribution::Exponential] {
        let x = generate(&SyntheticSpec::new(dist, 20_000, 1, 5)).unwrap();
        let v = x.as_flat().unwrap();
        let mean = v.iter().map(|&a| a as f64).sum::<f64>() / 20_000.0;
        let var = v.iter().map(|&a| (a as f64 - mean).powi(2)).sum::<f64>() / 19_999.0;
        assert!((var - 1.0).abs() < 0.05, "{dist:?} variance {var}");
    }
}

#[test]
fn vecs_round_trip_is_bit_identical() {
    let x = gaussian(100, 8, 1);
    let mut buf = Vec::new();
    write_vecs(&mut buf, &x).unwrap();
    assert_eq!(buf.len(), 100 * (4 + 32));
    let y = read_vecs(&buf[..]).unwrap();
    assert_eq!(x, y);
    let mut again = Vec::new();
    write_vecs(&mut again, &y).unwrap();
    assert_eq!(buf, again);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.fvecs");
    annkit::harness::save_vecs(&path, &x).unwrap();
    assert_eq!(annkit::harness::load_vecs(&path).unwrap(), x);
}

#[test]
fn every_family_survives_the_container() {
    let x = gaussian(300, 8, 2);
    let queries = gaussian(10, 8, 3);
    let params = BuildParams { seed: 9, clusters: Some(12), ..BuildParams::default() };
    let qp = QueryParams { ell: 3, rerank: Some(20), samples: 500, ..QueryParams::default() };
    let names = [
        "kd",
        "rp",
        "spill",
        "cover",
        "lsh",
        "mips-lsh",
        "approx-nn",
        "knn-graph",
        "sng",
        "vamana",
        "ivf",
        "ivfpq",
        "pq",
        "opq",
        "aq",
        "score-aware",
        "wedge",
        "asym",
        "threshold",
        "jl",
    ];
    let mut seen = std::collections::BTreeSet::new();
    for name in names {
        let p = if name == "sng" { BuildParams { alpha: 1.0, ..params.clone() } } else { params.clone() };
        let a = build_artifact(name, &x, &p).unwrap_or_else(|e| panic!("{name}: {e}"));
        seen.insert(a.family().tag());
        let mut buf = Vec::new();
        write_artifact(&mut buf, &a).unwrap();
        let b = read_artifact(&buf[..]).unwrap();
        assert_eq!(a, b, "{name}");
        let mut again = Vec::new();
        write_artifact(&mut again, &b).unwrap();
        assert_eq!(buf, again, "{name}");
        for q in queries.rows() {
            assert_eq!(a.search(&x, q, 5, &qp).unwrap(), b.search(&x, q, 5, &qp).unwrap(), "{name}");
        }
    }
    assert_eq!(seen.len(), annkit::harness::Family::ALL.len());
}

#[test]
fn builds_are_deterministic() {
    let x = gaussian(400, 8, 4);
    for name in ["rp", "lsh", "vamana", "ivf", "pq", "opq", "aq", "score-aware"] {
        let p = BuildParams { seed: 3, ..BuildParams::default() };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_artifact(&mut a, &build_artifact(name, &x, &p).unwrap()).unwrap();
        write_artifact(&mut b, &build_artifact(name, &x, &p).unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn coincidence_trend() {
    let g = SyntheticSpec::new(Distribution::GaussianStd, 2000, 0, 1);
    let r = experiment_coincidence(&g, &[4, 64], Some(300)).unwrap();
    let f = r.column("fraction").unwrap();
    assert!(f[0] < f[1], "{f:?}");
    let p = SyntheticSpec::new(Distribution::UniformPositive, 2000, 0, 1);
    let fp = experiment_coincidence(&p, &[64], Some(300)).unwrap().column("fraction").unwrap();
    assert!(fp[0] < f[1], "positive {fp:?} vs gaussian {f:?}");
}

#[test]
fn instability_trend() {
    let spec = SyntheticSpec::new(Distribution::GaussianStd, 2000, 0, 2);
    let r = experiment_instability(&spec, &[10, 100, 1000], 20, 0.1).unwrap();
    let ratio = r.column("ratio_mean").unwrap();
    let cover = r.column("cover_fraction").unwrap();
    assert!(ratio.windows(2).all(|w| w[0] > w[1]), "{ratio:?}");
    assert!(ratio.iter().all(|&r| r >= 1.0));
    assert!(cover.windows(2).all(|w| w[0] < w[1]), "{cover:?}");
}

/// Directions around 32 shared centers with unit-scale noise, norms uniform on [lo, hi].
fn norm_skewed(m: usize, d: usize, seed: u64, lo: f32, hi: f32) -> Collection {
    let mut c = rng(99);
    let centers: Vec<Vec<f32>> = (0..32).map(|_| gaussian_vec(&mut c, d)).collect();
    let mut r = rng(seed);
    let rows: Vec<Vec<f32>> = (0..m)
        .map(|_| {
            let center = &centers[r.random_range(0..centers.len())];
            let v: Vec<f32> = gaussian_vec(&mut r, d).iter().zip(center).map(|(a, b)| b + a).collect();
            let n = v.iter().map(|a| a * a).sum::<f32>().sqrt();
            let s: f32 = if hi > lo { r.random_range(lo..hi) } else { lo };
            v.iter().map(|a| a / n * s).collect()
        })
        .collect();
    Collection::from_rows(&rows).unwrap()
}

#[test]
fn ivf_sweep_reaches_exactness() {
    let x = gaussian(2000, 16, 5);
    let q = gaussian(50, 16, 6);
    let config = BenchConfig {
        family: BenchFamily::Ivf { clusters: Some(20), clustering: KMeansKind::Euclidean },
        kind: DistanceKind::L2Squared,
        k: 1,
        sweep: vec![1, 2, 5, 10, 20],
        seed: 1,
        timing: false,
    };
    let r = benchmark(&config, &x, &q).unwrap();
    assert_eq!(r.len(), 5);
    let rec = r.column("recall").unwrap();
    assert_eq!(*rec.last().unwrap(), 1.0);
    assert_eq!(r.to_csv(), benchmark(&config, &x, &q).unwrap().to_csv());
}

#[test]
#[ignore = "does not hold on synthetic norm-skewed data: the two clusterings tie within noise"]
fn spherical_ivf_beats_euclidean_for_mips() {
    let (mut euclidean, mut spherical) = (0.0, 0.0);
    for seed in 0..5u64 {
        let x = norm_skewed(4000, 16, 100 + seed, 0.5, 4.0);
        let q = norm_skewed(500, 16, 200 + seed, 1.0, 1.0);
        for (clustering, total) in [(KMeansKind::Euclidean, &mut euclidean), (KMeansKind::Spherical, &mut spherical)] {
            let config = BenchConfig {
                family: BenchFamily::Ivf { clusters: Some(64), clustering },
                kind: DistanceKind::NegInnerProduct,
                k: 1,
                sweep: vec![1, 2, 4, 8],
                seed,
                timing: false,
            };
            *total += benchmark(&config, &x, &q).unwrap().column("recall").unwrap().iter().sum::<f64>();
        }
    }
    println!("mean recall@1 euclidean {} spherical {}", euclidean / 20.0, spherical / 20.0);
    assert!(spherical > euclidean);
}

#[test]
fn other_bench_families_emit_rows() {
    let x = gaussian(1000, 16, 9);
    let q = gaussian(20, 16, 10);
    for (family, kind) in [
        (BenchFamily::Vamana { max_degree: 16, alpha: 1.2 }, DistanceKind::L2Squared),
        (BenchFamily::Rp { leaf_size: 16 }, DistanceKind::L2Squared),
        (BenchFamily::Lsh { hash: annkit::lsh::FamilyKind::Hyperplane, hash_len: 6 }, DistanceKind::Angular),
        (BenchFamily::Wedge { k_prime: None }, DistanceKind::NegInnerProduct),
    ] {
        let config = BenchConfig { family, kind, k: 10, sweep: vec![10, 100], seed: 1, timing: true };
        let r = benchmark(&config, &x, &q).unwrap();
        assert_eq!(r.len(), 2);
        let rec = r.column("recall").unwrap();
        assert!(rec[1] >= rec[0], "{:?}: {rec:?}", config.family);
    }
}
