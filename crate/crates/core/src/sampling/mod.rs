//! Sampling-based MIPS: wedge sampling estimates ranks without computing
//! inner products, and BoundedME eliminates candidates from partial inner
//! products over sampled dimensions.

mod alias;
mod boundedme;
mod wedge;

pub use alias::AliasTable;
pub use boundedme::{
    boundedme_h, boundedme_sample_count, boundedme_topk, normalized_means, BoundedMeAnswer, BoundedMeRound,
};
pub use wedge::{WedgeAnswer, WedgeIndex};
