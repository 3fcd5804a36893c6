use annkit::core::{brute_force_topk, epsilon_valid, ground_truth, recall, Collection, DistanceKind, Error};
use annkit::trees::{defeatist_search, potential_phi, rp_build, spill_build, CoverTree, KdTree, RpForest, SplitRule};
use annkit::util::{gaussian_vec, rng};
use proptest::prelude::*;

fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
    let mut r = rng(seed);
    let rows: Vec<Vec<f32>> = (0..m).map(|_| gaussian_vec(&mut r, d)).collect();
    Collection::from_rows(&rows).unwrap()
}

fn mean_recall(forest: &RpForest, x: &Collection, queries: &Collection, k: usize) -> f64 {
    let truth = ground_truth(x, queries, k, DistanceKind::L2Squared).unwrap();
    queries.rows().zip(&truth).map(|(q, t)| recall(t, &forest.search(q, k).unwrap(), k)).sum::<f64>()
        / queries.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kd_tree_is_the_oracle(
        rows in prop::collection::vec(prop::collection::vec(-4i8..4, 3), 1..80),
        q in prop::collection::vec(-5.0f32..5.0, 3),
        leaf in 1usize..8,
        k in 1usize..10,
    ) {
        // Small integer grids force many duplicates and ties.
        let rows: Vec<Vec<f32>> = rows.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
        let x = Collection::from_rows(&rows).unwrap();
        let tree = KdTree::build(&x, leaf).unwrap();
        prop_assert_eq!(tree.search(&q, k).unwrap(), brute_force_topk(&x, &q[..], k, DistanceKind::L2Squared).unwrap());
    }

    #[test]
    fn cover_tree_invariants_and_exactness(
        rows in prop::collection::btree_set(prop::collection::vec(-20i16..20, 2), 2..60),
        q in prop::collection::vec(-25.0f32..25.0, 2),
    ) {
        let rows: Vec<Vec<f32>> = rows.iter().map(|r| r.iter().map(|&v| v as f32 / 4.0).collect()).collect();
        let x = Collection::from_rows(&rows).unwrap();
        let tree = CoverTree::build(&x).unwrap();
        prop_assert_eq!(tree.check_invariants(), Ok(()));
        let k = 3.min(rows.len());
        let traced = tree.search_traced(&q, k).unwrap();
        let exact = brute_force_topk(&x, &q[..], k, DistanceKind::L2Squared).unwrap();
        prop_assert!(exact.ids().iter().all(|i| traced.final_candidates.contains(i)));
        prop_assert_eq!(traced.result, exact);
    }
}

#[test]
fn kd_tree_self_query_and_full_order() {
    let x = gaussian(100, 4, 1);
    let tree = KdTree::build(&x, 4).unwrap();
    for i in [0, 17, 99] {
        let r = tree.search(x.row(i), 1).unwrap();
        assert_eq!((r.neighbors[0].id, r.neighbors[0].score), (i as u32, 0.0));
    }
    let q = gaussian_vec(&mut rng(2), 4);
    assert_eq!(tree.search(&q, 100).unwrap(), brute_force_topk(&x, &q[..], 100, DistanceKind::L2Squared).unwrap());
}

#[test]
fn cover_tree_oracle_and_eps_validity() {
    let x = gaussian(500, 16, 3);
    let tree = CoverTree::build(&x).unwrap();
    let queries = gaussian(100, 16, 4);
    for q in queries.rows() {
        let exact = brute_force_topk(&x, q, 5, DistanceKind::L2Squared).unwrap();
        assert_eq!(tree.search(q, 5).unwrap(), exact);
        let best = exact.neighbors[0].score.sqrt();
        for eps in [0.25, 0.5, 2.0] {
            let a = tree.search_approx(q, eps).unwrap();
            assert!(epsilon_valid(best, a.score.sqrt(), eps).unwrap(), "eps {eps}");
        }
    }
}

#[test]
fn cover_tree_rejects_duplicates() {
    let x = Collection::from_rows(&[[1.0f32, 1.0], [2.0, 0.0], [1.0, 1.0]]).unwrap();
    assert!(matches!(CoverTree::build(&x), Err(Error::Duplicate(_))));
}

#[test]
fn forest_beats_single_tree() {
    let x = gaussian(2048, 32, 5);
    let queries = gaussian(100, 32, 6);
    let (mut one, mut eight) = (0.0, 0.0);
    for seed in 0..3 {
        one += mean_recall(&RpForest::build(&x, 16, SplitRule::RandomFractile, 1, seed).unwrap(), &x, &queries, 10);
        eight += mean_recall(&RpForest::build(&x, 16, SplitRule::RandomFractile, 8, seed).unwrap(), &x, &queries, 10);
    }
    println!("rp forest recall@10: T=1 {:.3}, T=8 {:.3}", one / 3.0, eight / 3.0);
    assert!(eight >= one);
}

#[test]
fn defeatist_recall_grows_with_forest_size() {
    let x = gaussian(1000, 16, 7);
    let queries = gaussian(50, 16, 8);
    let sizes = [1usize, 2, 4, 8, 16];
    let mut curve = vec![0.0; sizes.len()];
    for seed in 0..30 {
        for (slot, &t) in curve.iter_mut().zip(&sizes) {
            *slot +=
                mean_recall(&RpForest::build(&x, 16, SplitRule::RandomFractile, t, seed).unwrap(), &x, &queries, 5)
                    / 30.0;
        }
    }
    let inversions = curve.windows(2).filter(|w| w[1] < w[0]).count();
    println!("defeatist recall@5 by forest size {curve:?}");
    assert!(inversions <= (curve.len() - 1).div_ceil(10), "{curve:?}");
}

#[test]
fn spill_tree_finds_stored_points() {
    let x = gaussian(512, 16, 9);
    let (mut hits, mut trials) = (0, 0);
    for seed in 0..20 {
        let forest = spill_build(&x, 16, 0.2, seed).unwrap();
        for i in (0..512).step_by(8) {
            let r = defeatist_search(&forest, x.row(i), 1).unwrap();
            hits += (r.ids()[0] == i as u32) as usize;
            trials += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    assert!(rate >= 0.95, "self-retrieval {rate}");
}

#[test]
fn spill_tree_duplicates_ids() {
    let x = gaussian(1024, 8, 10);
    let forest = spill_build(&x, 16, 0.1, 1).unwrap();
    assert!(forest.trees()[0].leaf_total() >= 1024);
    let plain = rp_build(&x, 16, 1).unwrap();
    assert_eq!(plain.trees()[0].leaf_total(), 1024);
    assert!(spill_build(&x, 16, 0.5, 1).is_err());
}

#[test]
fn single_leaf_forest_is_exact() {
    let x = gaussian(12, 5, 11);
    let forest = rp_build(&x, 16, 2).unwrap();
    let q = gaussian_vec(&mut rng(12), 5);
    assert_eq!(
        defeatist_search(&forest, &q, 4).unwrap(),
        brute_force_topk(&x, &q[..], 4, DistanceKind::L2Squared).unwrap()
    );
}

#[test]
fn phi_examples() {
    let x = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 2.0]]).unwrap();
    assert!((potential_phi(&x, &[0.0, 0.0], 2).unwrap() - 0.75).abs() < 1e-12);
    let ring = Collection::from_rows(&[[1.0f32, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
    assert!((potential_phi(&ring, &[0.0, 0.0], 4).unwrap() - 1.0).abs() < 1e-12);
    assert!(potential_phi(&ring, &[0.0, 0.0], 1).is_err());
    assert!(potential_phi(&ring, &[1.0, 0.0], 2).is_err());
}
