use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::core::{dot, invalid, rescore, Collection, DistanceKind, Error, Neighbor, Result, TopK, TopKResult};
use crate::graph::{build_alpha_sng_exact, build_knn_graph, build_vamana, greedy_search, NeighborGraph, VamanaConfig};
use crate::ivf::{IvfIndex, KMeansKind};
use crate::lsh::{ApproxNn, ApproxNnConfig, FamilyKind, HashFamily, LshIndex, MipsLsh};
use crate::quant::{
    aq_distance, aq_encode, aq_train, opq_train, pq_adc, pq_adc_distance, pq_train, score_aware_vq_train, AqCode,
    AqCodebook, IvfPqIndex, OpqModel, PqCodebook, ScoreAwareVq,
};
use crate::sampling::WedgeIndex;
use crate::sketch::{
    jl_ip_estimate, threshold_ip_estimate, threshold_sketch, AsymSketch, AsymSketcher, JlSketcher, ThresholdSketch,
};
use crate::trees::{rp_build, spill_build, CoverTree, KdTree, RpForest};

pub const CONTAINER_MAGIC: [u8; 4] = *b"ANNK";
pub const CONTAINER_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqIndex {
    pub codebook: PqCodebook,
    pub codes: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpqIndex {
    pub model: OpqModel,
    pub codes: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AqIndex {
    pub codebook: AqCodebook,
    pub codes: Vec<AqCode>,
}

/// Score-aware codebook with the inverted lists of its assignments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreAwareIndex {
    pub quantizer: ScoreAwareVq,
    pub lists: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchIndex {
    pub sketcher: AsymSketcher,
    pub sketches: Vec<AsymSketch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdIndex {
    pub sketch_size: usize,
    pub seed: u64,
    pub sketches: Vec<ThresholdSketch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JlIndex {
    pub sketcher: JlSketcher,
    pub sketches: Vec<Vec<f32>>,
}

/// Every persistable index family.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Kd(KdTree),
    Forest(RpForest),
    Cover(CoverTree),
    Lsh(LshIndex),
    MipsLsh(MipsLsh),
    ApproxNn(ApproxNn),
    Graph(NeighborGraph),
    Ivf(IvfIndex),
    IvfPq(IvfPqIndex),
    Pq(PqIndex),
    Opq(OpqIndex),
    Aq(AqIndex),
    ScoreAware(ScoreAwareIndex),
    Wedge(WedgeIndex),
    Asym(SketchIndex),
    Threshold(ThresholdIndex),
    Jl(JlIndex),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Kd = 1,
    Forest,
    Cover,
    Lsh,
    MipsLsh,
    ApproxNn,
    Graph,
    Ivf,
    IvfPq,
    Pq,
    Opq,
    Aq,
    ScoreAware,
    Wedge,
    Asym,
    Threshold,
    Jl,
}

impl Family {
    pub const ALL: [Family; 17] = [
        Family::Kd,
        Family::Forest,
        Family::Cover,
        Family::Lsh,
        Family::MipsLsh,
        Family::ApproxNn,
        Family::Graph,
        Family::Ivf,
        Family::IvfPq,
        Family::Pq,
        Family::Opq,
        Family::Aq,
        Family::ScoreAware,
        Family::Wedge,
        Family::Asym,
        Family::Threshold,
        Family::Jl,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown family tag {tag}")))
    }
}

/// Build-time knobs; each family reads the ones it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildParams {
    pub kind: DistanceKind,
    pub seed: u64,
    pub leaf_size: usize,
    pub trees: usize,
    pub spill_alpha: f64,
    pub hash: FamilyKind,
    pub hash_len: usize,
    pub tables: usize,
    pub eps: f64,
    pub graph_degree: usize,
    pub alpha: f64,
    pub clusters: Option<usize>,
    pub clustering: KMeansKind,
    pub iters: usize,
    pub subspaces: usize,
    pub codewords: usize,
    pub beam: usize,
    pub theta: f64,
    pub sketch_size: usize,
    pub mappings: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            kind: DistanceKind::L2Squared,
            seed: 0,
            leaf_size: 16,
            trees: 4,
            spill_alpha: 0.1,
            hash: FamilyKind::Hyperplane,
            hash_len: 8,
            tables: 16,
            eps: 1.0,
            graph_degree: 32,
            alpha: 1.2,
            clusters: None,
            clustering: KMeansKind::Euclidean,
            iters: 25,
            subspaces: 4,
            codewords: 16,
            beam: 4,
            theta: 0.0,
            sketch_size: 64,
            mappings: 1,
        }
    }
}

/// Query-time knobs.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryParams {
    pub kind: Option<DistanceKind>,
    pub beam: usize,
    pub ell: usize,
    pub rerank: Option<usize>,
    pub samples: usize,
    pub k_prime: Option<usize>,
    pub seed: u64,
}

impl Default for QueryParams {
    fn default() -> Self {
        Self { kind: None, beam: 64, ell: 1, rerank: None, samples: 10_000, k_prime: None, seed: 0 }
    }
}

fn encode_payload<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    bincode::serialize(v).map_err(|e| Error::Format(e.to_string()))
}

fn decode_payload<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T> {
    bincode::deserialize(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn shortlist_depth(rerank: Option<usize>, k: usize) -> usize {
    rerank.unwrap_or((10 * k).max(50)).max(k)
}

/// Keeps the `depth` lowest scores, then re-scores them exactly.
fn rerank_by(
    x: &Collection,
    q: &[f32],
    k: usize,
    depth: usize,
    kind: DistanceKind,
    scores: impl Iterator<Item = f64>,
) -> TopKResult {
    let mut top = TopK::new(depth);
    for (id, s) in scores.enumerate() {
        top.push(Neighbor::new(id as u32, s));
    }
    rescore(x, q, &top.into_result().ids(), k, kind)
}

impl Artifact {
    pub fn family(&self) -> Family {
        match self {
            Artifact::Kd(_) => Family::Kd,
            Artifact::Forest(_) => Family::Forest,
            Artifact::Cover(_) => Family::Cover,
            Artifact::Lsh(_) => Family::Lsh,
            Artifact::MipsLsh(_) => Family::MipsLsh,
            Artifact::ApproxNn(_) => Family::ApproxNn,
            Artifact::Graph(_) => Family::Graph,
            Artifact::Ivf(_) => Family::Ivf,
            Artifact::IvfPq(_) => Family::IvfPq,
            Artifact::Pq(_) => Family::Pq,
            Artifact::Opq(_) => Family::Opq,
            Artifact::Aq(_) => Family::Aq,
            Artifact::ScoreAware(_) => Family::ScoreAware,
            Artifact::Wedge(_) => Family::Wedge,
            Artifact::Asym(_) => Family::Asym,
            Artifact::Threshold(_) => Family::Threshold,
            Artifact::Jl(_) => Family::Jl,
        }
    }

    fn payload(&self) -> Result<Vec<u8>> {
        match self {
            Artifact::Kd(v) => encode_payload(v),
            Artifact::Forest(v) => encode_payload(v),
            Artifact::Cover(v) => encode_payload(v),
            Artifact::Lsh(v) => encode_payload(v),
            Artifact::MipsLsh(v) => encode_payload(v),
            Artifact::ApproxNn(v) => encode_payload(v),
            Artifact::Graph(v) => encode_payload(v),
            Artifact::Ivf(v) => encode_payload(v),
            Artifact::IvfPq(v) => encode_payload(v),
            Artifact::Pq(v) => encode_payload(v),
            Artifact::Opq(v) => encode_payload(v),
            Artifact::Aq(v) => encode_payload(v),
            Artifact::ScoreAware(v) => encode_payload(v),
            Artifact::Wedge(v) => encode_payload(v),
            Artifact::Asym(v) => encode_payload(v),
            Artifact::Threshold(v) => encode_payload(v),
            Artifact::Jl(v) => encode_payload(v),
        }
    }

    fn from_payload(family: Family, bytes: &[u8]) -> Result<Self> {
        Ok(match family {
            Family::Kd => Artifact::Kd(decode_payload(bytes)?),
            Family::Forest => Artifact::Forest(decode_payload(bytes)?),
            Family::Cover => Artifact::Cover(decode_payload(bytes)?),
            Family::Lsh => Artifact::Lsh(decode_payload(bytes)?),
            Family::MipsLsh => Artifact::MipsLsh(decode_payload(bytes)?),
            Family::ApproxNn => Artifact::ApproxNn(decode_payload(bytes)?),
            Family::Graph => Artifact::Graph(decode_payload(bytes)?),
            Family::Ivf => Artifact::Ivf(decode_payload(bytes)?),
            Family::IvfPq => Artifact::IvfPq(decode_payload(bytes)?),
            Family::Pq => Artifact::Pq(decode_payload(bytes)?),
            Family::Opq => Artifact::Opq(decode_payload(bytes)?),
            Family::Aq => Artifact::Aq(decode_payload(bytes)?),
            Family::ScoreAware => Artifact::ScoreAware(decode_payload(bytes)?),
            Family::Wedge => Artifact::Wedge(decode_payload(bytes)?),
            Family::Asym => Artifact::Asym(decode_payload(bytes)?),
            Family::Threshold => Artifact::Threshold(decode_payload(bytes)?),
            Family::Jl => Artifact::Jl(decode_payload(bytes)?),
        })
    }

    /// Distance kind the family ranks by when the query does not override it.
    pub fn default_kind(&self) -> DistanceKind {
        match self {
            Artifact::Lsh(idx) => match idx.family().kind {
                FamilyKind::Hyperplane | FamilyKind::CrossPolytope => DistanceKind::Angular,
                _ => DistanceKind::L2Squared,
            },
            Artifact::Graph(g) => g.kind(),
            Artifact::Ivf(i) => i.kind,
            Artifact::MipsLsh(_)
            | Artifact::ScoreAware(_)
            | Artifact::Wedge(_)
            | Artifact::Asym(_)
            | Artifact::Threshold(_)
            | Artifact::Jl(_) => DistanceKind::NegInnerProduct,
            _ => DistanceKind::L2Squared,
        }
    }

    /// Answers a top-k query. `x` is the indexed collection; families that
    /// embed their data ignore it.
    pub fn search(&self, x: &Collection, q: &[f32], k: usize, p: &QueryParams) -> Result<TopKResult> {
        if k == 0 {
            return invalid("k must be positive");
        }
        let kind = p.kind.unwrap_or_else(|| self.default_kind());
        Ok(match self {
            Artifact::Kd(t) => t.search(q, k)?,
            Artifact::Forest(f) => f.search(q, k)?,
            Artifact::Cover(t) => t.search(q, k)?,
            Artifact::Lsh(i) => i.search(q, k, kind)?,
            Artifact::MipsLsh(i) => i.search(q, k)?,
            Artifact::ApproxNn(i) => TopKResult::from_unsorted(i.query(q)?.into_iter().collect(), k),
            Artifact::Graph(g) => greedy_search(g, x, q, k, g.entry(), p.beam.max(k))?.0,
            Artifact::Ivf(i) => i.search(x, q, k, p.ell.clamp(1, i.num_clusters()))?.result,
            Artifact::IvfPq(i) => i.search(x, q, k, p.ell.clamp(1, i.ivf.num_clusters()), p.rerank)?,
            Artifact::Pq(i) => {
                let tables = pq_adc(&i.codebook, q)?;
                let scores = i.codes.iter().map(|c| pq_adc_distance(&tables, c));
                match p.rerank {
                    Some(r) => rerank_by(x, q, k, r.max(k), DistanceKind::L2Squared, scores),
                    None => TopKResult::from_unsorted(
                        scores.enumerate().map(|(id, s)| Neighbor::new(id as u32, s)).collect(),
                        k,
                    ),
                }
            }
            Artifact::Opq(i) => {
                let tables = i.model.adc(q)?;
                let scores = i.codes.iter().map(|c| pq_adc_distance(&tables, c));
                match p.rerank {
                    Some(r) => rerank_by(x, q, k, r.max(k), DistanceKind::L2Squared, scores),
                    None => TopKResult::from_unsorted(
                        scores.enumerate().map(|(id, s)| Neighbor::new(id as u32, s)).collect(),
                        k,
                    ),
                }
            }
            Artifact::Aq(i) => {
                let tables = i.codebook.inner_product_tables(q)?;
                let qn = dot(q, q);
                let scores = i.codes.iter().map(|c| aq_distance(&i.codebook, &tables, qn, c));
                match p.rerank {
                    Some(r) => rerank_by(x, q, k, r.max(k), DistanceKind::L2Squared, scores),
                    None => TopKResult::from_unsorted(
                        scores.enumerate().map(|(id, s)| Neighbor::new(id as u32, s)).collect(),
                        k,
                    ),
                }
            }
            Artifact::ScoreAware(i) => {
                let mut order: Vec<Neighbor> =
                    (0..i.quantizer.len()).map(|j| Neighbor::new(j as u32, -dot(q, i.quantizer.codeword(j)))).collect();
                order.sort();
                let ids: Vec<u32> =
                    order.iter().take(p.ell.max(1)).flat_map(|n| i.lists[n.id as usize].iter().copied()).collect();
                rescore(x, q, &ids, k, DistanceKind::NegInnerProduct)
            }
            Artifact::Wedge(w) => w.search(x, q, p.samples.max(1), k, p.k_prime, p.seed)?.result,
            Artifact::Asym(s) => {
                let scores: Vec<f64> =
                    s.sketches.iter().map(|sk| s.sketcher.upper_bound(q, sk).map(|v| -v)).collect::<Result<_>>()?;
                rerank_by(x, q, k, shortlist_depth(p.rerank, k), DistanceKind::NegInnerProduct, scores.into_iter())
            }
            Artifact::Threshold(t) => {
                let sq = threshold_sketch(q, t.sketch_size, t.seed)?;
                let scores = t.sketches.iter().map(|su| -threshold_ip_estimate(&sq, su));
                rerank_by(x, q, k, shortlist_depth(p.rerank, k), DistanceKind::NegInnerProduct, scores)
            }
            Artifact::Jl(j) => {
                let sq = j.sketcher.project(q);
                let scores = j.sketches.iter().map(|su| -jl_ip_estimate(&sq, su));
                rerank_by(x, q, k, shortlist_depth(p.rerank, k), DistanceKind::NegInnerProduct, scores)
            }
        })
    }
}

/// Builds an index of the named family: kd, rp, spill, cover, lsh, mips-lsh,
/// approx-nn, knn-graph, sng, vamana, ivf, ivfpq, pq, opq, aq, score-aware,
/// wedge, asym, threshold, jl.
pub fn build_artifact(name: &str, x: &Collection, p: &BuildParams) -> Result<Artifact> {
    let sqrt_m = (x.len() as f64).sqrt().ceil() as usize;
    Ok(match name {
        "kd" => Artifact::Kd(KdTree::build(x, p.leaf_size)?),
        "rp" => {
            let forest = if p.trees <= 1 {
                rp_build(x, p.leaf_size, p.seed)?
            } else {
                RpForest::build(x, p.leaf_size, crate::trees::SplitRule::RandomFractile, p.trees, p.seed)?
            };
            Artifact::Forest(forest)
        }
        "spill" => Artifact::Forest(spill_build(x, p.leaf_size, p.spill_alpha, p.seed)?),
        "cover" => Artifact::Cover(CoverTree::build(x)?),
        "lsh" => {
            let family = HashFamily::new(p.hash, p.seed, x.dim())?;
            Artifact::Lsh(LshIndex::build(x, family, p.hash_len, p.tables)?)
        }
        "mips-lsh" => Artifact::MipsLsh(MipsLsh::build(x, p.hash_len, p.tables, p.seed)?),
        "approx-nn" => Artifact::ApproxNn(ApproxNn::build(x, ApproxNnConfig::new(p.eps, p.seed))?),
        "knn-graph" => {
            Artifact::Graph(build_knn_graph(x, p.graph_degree.min(x.len().saturating_sub(1)).max(1), p.kind)?)
        }
        "sng" => Artifact::Graph(build_alpha_sng_exact(x, p.alpha, p.kind)?),
        "vamana" => Artifact::Graph(build_vamana(x, VamanaConfig::new(p.alpha, p.graph_degree, p.seed), p.kind)?),
        "ivf" => Artifact::Ivf(IvfIndex::build(x, p.clusters, p.kind, p.clustering, p.iters, p.seed)?),
        "ivfpq" => Artifact::IvfPq(IvfPqIndex::build(
            x,
            p.clusters.unwrap_or(sqrt_m),
            p.subspaces,
            p.codewords,
            p.iters,
            p.seed,
        )?),
        "pq" => {
            let codebook = pq_train(x, p.subspaces, p.codewords, p.iters, p.seed)?;
            let codes = codebook.encode_all(x);
            Artifact::Pq(PqIndex { codebook, codes })
        }
        "opq" => {
            let model = opq_train(x, p.subspaces, p.codewords, 5, p.seed)?;
            let codes = x.rows().map(|u| model.encode(u)).collect();
            Artifact::Opq(OpqIndex { model, codes })
        }
        "aq" => {
            let codebook = aq_train(x, p.subspaces, p.codewords, p.beam, 3, p.seed)?;
            let codes = x.rows().map(|u| aq_encode(&codebook, u, p.beam)).collect();
            Artifact::Aq(AqIndex { codebook, codes })
        }
        "score-aware" => {
            let quantizer = score_aware_vq_train(
                x,
                p.clusters.unwrap_or(sqrt_m),
                p.theta,
                (x.dim().max(2) - 1) as f64,
                p.iters,
                p.seed,
            )?;
            let mut lists = vec![Vec::new(); quantizer.len()];
            for (id, u) in x.rows().enumerate() {
                lists[quantizer.encode(u)? as usize].push(id as u32);
            }
            Artifact::ScoreAware(ScoreAwareIndex { quantizer, lists })
        }
        "wedge" => Artifact::Wedge(WedgeIndex::build(x)?),
        "asym" => {
            let sketcher = AsymSketcher::new(p.sketch_size, p.mappings, p.seed)?;
            let sketches = (0..x.len()).map(|i| sketcher.sketch(x.get(i))).collect::<Result<_>>()?;
            Artifact::Asym(SketchIndex { sketcher, sketches })
        }
        "threshold" => {
            let sketches =
                (0..x.len()).map(|i| threshold_sketch(x.get(i), p.sketch_size, p.seed)).collect::<Result<_>>()?;
            Artifact::Threshold(ThresholdIndex { sketch_size: p.sketch_size, seed: p.seed, sketches })
        }
        "jl" => {
            let sketcher = JlSketcher::new(p.sketch_size, p.seed);
            let sketches = (0..x.len()).map(|i| sketcher.project(x.get(i))).collect();
            Artifact::Jl(JlIndex { sketcher, sketches })
        }
        other => return invalid(format!("unknown index family `{other}`")),
    })
}

/// Envelope: magic, little-endian u16 version, family tag byte, bincode payload.
pub fn write_artifact<W: Write>(mut w: W, a: &Artifact) -> Result<()> {
    w.write_all(&CONTAINER_MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&[a.family().tag()])?;
    w.write_all(&a.payload()?)?;
    w.flush()?;
    Ok(())
}

pub fn read_artifact<R: Read>(mut r: R) -> Result<Artifact> {
    let mut head = [0u8; 7];
    r.read_exact(&mut head).map_err(|_| Error::Format("truncated container header".into()))?;
    if head[..4] != CONTAINER_MAGIC {
        return Err(Error::Format("not an annkit container".into()));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != CONTAINER_VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let family = Family::from_tag(head[6])?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    Artifact::from_payload(family, &payload)
}

pub fn save_artifact(path: impl AsRef<Path>, a: &Artifact) -> Result<()> {
    write_artifact(BufWriter::new(File::create(path)?), a)
}

pub fn load_artifact(path: impl AsRef<Path>) -> Result<Artifact> {
    read_artifact(BufReader::new(File::open(path)?))
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| format!("{f:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for f in Family::ALL {
            assert_eq!(Family::from_tag(f.tag()).unwrap(), f);
        }
        assert!(Family::from_tag(0).is_err());
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(read_artifact(&b"NOPE\x01\x00\x01"[..]).is_err());
        assert!(read_artifact(&b"ANNK\x09\x00\x01"[..]).is_err());
        assert!(read_artifact(&b"AN"[..]).is_err());
    }
}
