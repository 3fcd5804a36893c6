use serde::{Deserialize, Serialize};

use super::pq::{pq_adc, pq_adc_distance, pq_encode, pq_train, PqCodebook};
use crate::core::{rescore, Collection, DistanceKind, Error, Neighbor, Result, TopK, TopKResult};
use crate::ivf::{route, IvfIndex, KMeansKind};

/// IVF routing with PQ-compressed lists scanned by ADC, then optional exact
/// re-ranking of a shortlist. Squared Euclidean only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvfPqIndex {
    pub ivf: IvfIndex,
    pub pq: PqCodebook,
    /// Codes per id.
    pub codes: Vec<Vec<u32>>,
}

impl IvfPqIndex {
    pub fn build(x: &Collection, clusters: usize, l: usize, c: usize, iters: usize, seed: u64) -> Result<Self> {
        let ivf = IvfIndex::build(x, Some(clusters), DistanceKind::L2Squared, KMeansKind::Euclidean, iters, seed)?;
        let pq = pq_train(x, l, c, iters, seed ^ 0x5151)?;
        let codes = pq.encode_all(x);
        Ok(Self { ivf, pq, codes })
    }

    /// ADC top-k over the routed lists; with `rerank = Some(r)` the ADC
    /// shortlist of size max(r, k) is re-scored exactly against `x`.
    pub fn search(&self, x: &Collection, q: &[f32], k: usize, ell: usize, rerank: Option<usize>) -> Result<TopKResult> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let tables = pq_adc(&self.pq, q)?;
        let depth = rerank.map_or(k, |r| r.max(k));
        let mut top = TopK::new(depth);
        for cluster in route(&self.ivf, q, ell)? {
            for &id in &self.ivf.lists[cluster as usize] {
                top.push(Neighbor::new(id, pq_adc_distance(&tables, &self.codes[id as usize])));
            }
        }
        let shortlist = top.into_result();
        Ok(match rerank {
            Some(_) => rescore(x, q, &shortlist.ids(), k, DistanceKind::L2Squared),
            None => TopKResult::from_unsorted(shortlist.neighbors, k),
        })
    }

    pub fn encode(&self, u: &[f32]) -> Vec<u32> {
        pq_encode(&self.pq, u)
    }
}
