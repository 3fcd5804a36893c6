use std::io::{self, Write};

use annkit::core::{brute_force_topk, dot, Collection, DistanceKind};
use annkit::graph::{build_knn_graph, greedy_search};
use annkit::harness::{
    build_artifact, generate, read_artifact, read_vecs, write_artifact, write_vecs, BuildParams, Distribution,
    QueryParams, SyntheticSpec,
};
use annkit::ivf::{IvfIndex, KMeansKind};
use annkit::quant::{pq_adc, pq_adc_distance, pq_decode, pq_encode, pq_train};
use annkit::sampling::AliasTable;
use annkit::sketch::AsymSketcher;
use annkit::trees::{CoverTree, KdTree};
use annkit::util::rng;

type Check = std::result::Result<(), String>;

fn gaussian(m: usize, d: usize, seed: u64) -> Collection {
    generate(&SyntheticSpec::new(Distribution::GaussianStd, m, d, seed)).expect("valid spec")
}

fn exact_trees(seed: u64) -> Check {
    let x = gaussian(500, 8, seed);
    let q = gaussian(50, 8, seed ^ 1);
    let kd = KdTree::build(&x, 8).map_err(|e| e.to_string())?;
    let cover = CoverTree::build(&x).map_err(|e| e.to_string())?;
    cover.check_invariants()?;
    for row in q.rows() {
        let truth = brute_force_topk(&x, row, 5, DistanceKind::L2Squared).map_err(|e| e.to_string())?;
        if kd.search(row, 5).map_err(|e| e.to_string())? != truth {
            return Err("kd-tree differs from the oracle".into());
        }
        if cover.search(row, 5).map_err(|e| e.to_string())? != truth {
            return Err("cover tree differs from the oracle".into());
        }
    }
    Ok(())
}

fn ivf_full_probe(seed: u64) -> Check {
    let x = gaussian(600, 8, seed);
    let index = IvfIndex::build(&x, Some(20), DistanceKind::L2Squared, KMeansKind::Euclidean, 10, seed)
        .map_err(|e| e.to_string())?;
    for row in gaussian(20, 8, seed ^ 2).rows() {
        let got = index.search(&x, row, 3, 20).map_err(|e| e.to_string())?.result;
        if got != brute_force_topk(&x, row, 3, DistanceKind::L2Squared).map_err(|e| e.to_string())? {
            return Err("full probe is not exact".into());
        }
    }
    Ok(())
}

fn complete_graph(seed: u64) -> Check {
    let x = gaussian(80, 6, seed);
    let g = build_knn_graph(&x, 79, DistanceKind::L2Squared).map_err(|e| e.to_string())?;
    for row in gaussian(10, 6, seed ^ 3).rows() {
        let (got, _) = greedy_search(&g, &x, row, 5, g.entry(), 5).map_err(|e| e.to_string())?;
        if got != brute_force_topk(&x, row, 5, DistanceKind::L2Squared).map_err(|e| e.to_string())? {
            return Err("greedy search on the complete graph is not exact".into());
        }
    }
    Ok(())
}

fn adc_identity(seed: u64) -> Check {
    let x = gaussian(400, 8, seed);
    let cb = pq_train(&x, 4, 8, 10, seed).map_err(|e| e.to_string())?;
    for (q, u) in gaussian(50, 8, seed ^ 4).rows().zip(x.rows()) {
        let code = pq_encode(&cb, u);
        let tables = pq_adc(&cb, q).map_err(|e| e.to_string())?;
        let direct = annkit::core::l2_sq(q, &pq_decode(&cb, &code));
        let adc = pq_adc_distance(&tables, &code);
        if (adc - direct).abs() > 1e-5 * direct.max(1.0) {
            return Err(format!("ADC {adc} vs decoded {direct}"));
        }
    }
    Ok(())
}

fn asym_dominance(seed: u64) -> Check {
    let sk = AsymSketcher::new(16, 2, seed).map_err(|e| e.to_string())?;
    let data = gaussian(1000, 40, seed);
    let queries = gaussian(1000, 40, seed ^ 5);
    for (u, q) in data.rows().zip(queries.rows()) {
        let s = sk.sketch(u).map_err(|e| e.to_string())?;
        if sk.upper_bound(q, &s).map_err(|e| e.to_string())? < dot(q, u) {
            return Err("sketch bound fell below the inner product".into());
        }
    }
    Ok(())
}

fn alias_frequencies(seed: u64) -> Check {
    let t = AliasTable::new(&[1.0, 3.0]).map_err(|e| e.to_string())?;
    let mut r = rng(seed);
    let ones = (0..100_000).filter(|_| t.sample(&mut r) == 1).count() as f64 / 100_000.0;
    if (ones - 0.75).abs() > 0.02 {
        return Err(format!("frequency {ones} for weight 3/4"));
    }
    Ok(())
}

fn round_trips(seed: u64) -> Check {
    let x = gaussian(200, 8, seed);
    let mut buf = Vec::new();
    write_vecs(&mut buf, &x).map_err(|e| e.to_string())?;
    if read_vecs(&buf[..]).map_err(|e| e.to_string())? != x {
        return Err(".fvecs round trip changed the data".into());
    }
    let params = BuildParams { seed, clusters: Some(10), ..BuildParams::default() };
    for family in ["kd", "ivf", "pq", "vamana", "wedge"] {
        let a = build_artifact(family, &x, &params).map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        write_artifact(&mut bytes, &a).map_err(|e| e.to_string())?;
        let b = read_artifact(&bytes[..]).map_err(|e| e.to_string())?;
        let q = x.row(0);
        let p = QueryParams::default();
        if a != b
            || a.search(&x, q, 3, &p).map_err(|e| e.to_string())?
                != b.search(&x, q, 3, &p).map_err(|e| e.to_string())?
        {
            return Err(format!("{family} container round trip differs"));
        }
    }
    Ok(())
}

type NamedCheck = (&'static str, fn(u64) -> Check);

/// Runs every check, printing one PASS/FAIL line each; returns the failure count.
pub fn run<W: Write>(seed: u64, out: &mut W) -> io::Result<usize> {
    let checks: [NamedCheck; 7] = [
        ("exact-trees-match-oracle", exact_trees),
        ("ivf-full-probe-exact", ivf_full_probe),
        ("complete-graph-search-exact", complete_graph),
        ("pq-adc-identity", adc_identity),
        ("asym-sketch-upper-bound", asym_dominance),
        ("alias-frequencies", alias_frequencies),
        ("file-and-container-round-trips", round_trips),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check(seed) {
            Ok(()) => writeln!(out, "PASS {name}")?,
            Err(msg) => {
                failures += 1;
                writeln!(out, "FAIL {name}: {msg}")?;
            }
        }
    }
    Ok(failures)
}
