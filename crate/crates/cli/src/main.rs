mod selftest;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use annkit::core::{Collection, DistanceKind, Error};
use annkit::harness::{
    benchmark, build_artifact, experiment_coincidence, experiment_instability, generate, load_artifact, load_vecs,
    save_artifact, save_vecs, BenchConfig, BenchFamily, BuildParams, Distribution, ExperimentReport, QueryParams,
    SyntheticSpec,
};
use annkit::ivf::KMeansKind;
use annkit::lsh::FamilyKind;
use annkit::sampling::boundedme_topk;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "annkit", version, about = "Build, query and benchmark vector retrieval indexes")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic collection in .fvecs format.
    Generate {
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an index and save it in the container format.
    Build(BuildArgs),
    /// Answer queries against an index (or with BoundedME) and print CSV.
    Query(QueryArgs),
    /// Recall-versus-cost sweep for one index family.
    Bench(BenchArgs),
    /// Run a distributional experiment.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// Run fast invariant checks; exits 1 if any fail.
    Selftest,
}

#[derive(Args)]
struct BuildArgs {
    /// kd, rp, spill, cover, lsh, mips-lsh, approx-nn, knn-graph, sng, vamana, ivf,
    /// ivfpq, pq, opq, aq, score-aware, wedge, asym, threshold, jl
    family: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "l2")]
    kind: String,
    #[arg(long, default_value_t = 16)]
    leaf_size: usize,
    #[arg(long, default_value_t = 4)]
    trees: usize,
    #[arg(long, default_value_t = 0.1)]
    spill_alpha: f64,
    /// hyperplane, cross-polytope, bit, or pstable:WIDTH
    #[arg(long, default_value = "hyperplane")]
    hash: String,
    #[arg(long, default_value_t = 8)]
    hash_len: usize,
    #[arg(long, default_value_t = 16)]
    tables: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 32)]
    degree: usize,
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    /// Number of clusters, or `auto` for ⌈√m⌉.
    #[arg(long = "C", default_value = "auto")]
    clusters: String,
    #[arg(long, default_value = "euclidean")]
    clustering: String,
    #[arg(long, default_value_t = 25)]
    iters: usize,
    #[arg(long, default_value_t = 4)]
    subspaces: usize,
    #[arg(long, default_value_t = 16)]
    codewords: usize,
    #[arg(long, default_value_t = 4)]
    beam: usize,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 64)]
    sketch_size: usize,
    #[arg(long, default_value_t = 1)]
    mappings: usize,
}

#[derive(Args)]
struct QueryArgs {
    /// Index container; omit together with --boundedme.
    #[arg(long, required_unless_present = "boundedme")]
    index: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, default_value_t = 64)]
    beam: usize,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    #[arg(long)]
    rerank: Option<usize>,
    /// Wedge sample budget S.
    #[arg(long = "S", default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    k_prime: Option<usize>,
    /// Use BoundedME instead of an index.
    #[arg(long)]
    boundedme: bool,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// ivf, vamana, rp, lsh or wedge
    family: String,
    /// Data file; a synthetic collection is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n_queries: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "l2")]
    kind: String,
    #[arg(long = "C", default_value = "auto")]
    clusters: String,
    #[arg(long, default_value = "euclidean")]
    clustering: String,
    #[arg(long, default_value_t = 32)]
    degree: usize,
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    #[arg(long, default_value_t = 16)]
    leaf_size: usize,
    #[arg(long, default_value = "hyperplane")]
    hash: String,
    #[arg(long, default_value_t = 8)]
    hash_len: usize,
    #[arg(long)]
    k_prime: Option<usize>,
    /// Comma-separated values of the swept parameter.
    #[arg(long, alias = "sweep-l", value_delimiter = ',', required = true)]
    sweep: Vec<usize>,
    /// Write 0 in the wall-time column so output is byte-stable.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Fraction of points that are their own inner-product maximizer.
    Coincidence {
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Query points per dimension; all points when omitted.
        #[arg(long)]
        sample_queries: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio of farthest to nearest distance as d grows.
    Instability {
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 0.1)]
        cover_eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure split by exit code: 2 for bad invocations, 1 for everything else.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse<T: FromStr<Err = Error>>(s: &str) -> Outcome<T> {
    Ok(s.parse::<T>()?)
}

fn parse_clusters(s: &str) -> Outcome<Option<usize>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Failure::Usage(format!("--C expects a count or `auto`, got `{s}`")))
}

fn parse_clustering(s: &str) -> Outcome<KMeansKind> {
    match s.to_ascii_lowercase().as_str() {
        "euclidean" => Ok(KMeansKind::Euclidean),
        "spherical" => Ok(KMeansKind::Spherical),
        other => Err(Failure::Usage(format!("unknown clustering `{other}`"))),
    }
}

fn parse_hash(s: &str) -> Outcome<FamilyKind> {
    let lower = s.to_ascii_lowercase();
    match lower.as_str() {
        "hyperplane" => Ok(FamilyKind::Hyperplane),
        "cross-polytope" => Ok(FamilyKind::CrossPolytope),
        "bit" | "bit-sampling" => Ok(FamilyKind::BitSampling),
        _ => match lower.strip_prefix("pstable:").map(str::parse::<f64>) {
            Some(Ok(width)) if width > 0.0 => Ok(FamilyKind::PStable { width }),
            _ => Err(Failure::Usage(format!("unknown hash family `{s}`"))),
        },
    }
}

fn emit(report: &ExperimentReport, out: Option<&PathBuf>) -> Outcome<()> {
    match out {
        Some(path) => report.write_csv(BufWriter::new(File::create(path)?))?,
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate { dist, m, d, out } => {
            let x = generate(&SyntheticSpec::new(parse(&dist)?, m, d, seed))?;
            save_vecs(out, &x)?;
        }
        Command::Build(a) => {
            let x = load_vecs(&a.data)?;
            let params = BuildParams {
                kind: parse(&a.kind)?,
                seed,
                leaf_size: a.leaf_size,
                trees: a.trees,
                spill_alpha: a.spill_alpha,
                hash: parse_hash(&a.hash)?,
                hash_len: a.hash_len,
                tables: a.tables,
                eps: a.eps,
                graph_degree: a.degree,
                alpha: a.alpha,
                clusters: parse_clusters(&a.clusters)?,
                clustering: parse_clustering(&a.clustering)?,
                iters: a.iters,
                subspaces: a.subspaces,
                codewords: a.codewords,
                beam: a.beam,
                theta: a.theta,
                sketch_size: a.sketch_size,
                mappings: a.mappings,
            };
            save_artifact(&a.out, &build_artifact(&a.family, &x, &params)?)?;
        }
        Command::Query(a) => {
            let x = load_vecs(&a.data)?;
            let queries = load_vecs(&a.queries)?;
            let mut report = ExperimentReport::new(["query", "rank", "id", "score"]);
            let mut push = |qi: usize, result: annkit::TopKResult| {
                for (rank, n) in result.neighbors.iter().enumerate() {
                    report.push(vec![qi.to_string(), rank.to_string(), n.id.to_string(), format!("{:.6}", n.score)]);
                }
            };
            if a.boundedme {
                for (qi, q) in queries.rows().enumerate() {
                    push(qi, boundedme_topk(&x, q, a.k, a.eps, a.delta, seed.wrapping_add(qi as u64))?.result);
                }
            } else {
                let index = load_artifact(a.index.as_ref().expect("clap enforces --index"))?;
                let params = QueryParams {
                    kind: a.kind.as_deref().map(parse::<DistanceKind>).transpose()?,
                    beam: a.beam,
                    ell: a.ell,
                    rerank: a.rerank,
                    samples: a.samples,
                    k_prime: a.k_prime,
                    seed,
                };
                for (qi, q) in queries.rows().enumerate() {
                    let p = QueryParams { seed: seed.wrapping_add(qi as u64), ..params.clone() };
                    push(qi, index.search(&x, q, a.k, &p)?);
                }
            }
            emit(&report, a.out.as_ref())?;
        }
        Command::Bench(a) => {
            let dist: Distribution = parse(&a.dist)?;
            let x = match &a.data {
                Some(p) => load_vecs(p)?,
                None => generate(&SyntheticSpec::new(dist, a.m, a.d, seed))?,
            };
            let queries: Collection = match &a.queries {
                Some(p) => load_vecs(p)?,
                None => generate(&SyntheticSpec::new(dist, a.n_queries, x.dim(), seed ^ 0x5eed))?,
            };
            let family = match a.family.as_str() {
                "ivf" => BenchFamily::Ivf {
                    clusters: parse_clusters(&a.clusters)?,
                    clustering: parse_clustering(&a.clustering)?,
                },
                "vamana" => BenchFamily::Vamana { max_degree: a.degree, alpha: a.alpha },
                "rp" => BenchFamily::Rp { leaf_size: a.leaf_size },
                "lsh" => BenchFamily::Lsh { hash: parse_hash(&a.hash)?, hash_len: a.hash_len },
                "wedge" => BenchFamily::Wedge { k_prime: a.k_prime },
                other => return Err(Failure::Usage(format!("unknown bench family `{other}`"))),
            };
            let config =
                BenchConfig { family, kind: parse(&a.kind)?, k: a.k, sweep: a.sweep, seed, timing: !a.no_timing };
            emit(&benchmark(&config, &x, &queries)?, a.out.as_ref())?;
        }
        Command::Experiment { which } => match which {
            Experiment::Coincidence { dist, m, dims, sample_queries, out } => {
                let spec = SyntheticSpec::new(parse(&dist)?, m, 0, seed);
                emit(&experiment_coincidence(&spec, &dims, sample_queries)?, out.as_ref())?;
            }
            Experiment::Instability { dist, m, dims, queries, cover_eps, out } => {
                let spec = SyntheticSpec::new(parse(&dist)?, m, 0, seed);
                emit(&experiment_instability(&spec, &dims, queries, cover_eps)?, out.as_ref())?;
            }
        },
        Command::Selftest => {
            let mut stdout = io::stdout().lock();
            let failures = selftest::run(seed, &mut stdout)?;
            stdout.flush()?;
            if failures > 0 {
                return Err(Failure::Runtime(format!("{failures} selftest check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `annkit --help` for usage.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
