//! Quantizers: vector (VQ), product (PQ), optimized product (OPQ), additive
//! (AQ) and score-aware VQ, plus table-based asymmetric distances.

mod aq;
mod codes;
mod ivfpq;
mod opq;
mod pq;
mod score_aware;
mod vq;

pub use aq::{aq_distance, aq_encode, aq_exhaustive_encode, aq_train, AqCode, AqCodebook};
pub use codes::{bytes_per_code, pack_codes, unpack_codes};
pub use ivfpq::IvfPqIndex;
pub use opq::{opq_train, OpqModel};
pub use pq::{pq_adc, pq_adc_distance, pq_decode, pq_encode, pq_train, AdcTables, PqCodebook};
pub use score_aware::{residual_decompose, score_aware_loss, score_aware_vq_train, score_aware_weight, ScoreAwareVq};
pub use vq::{vq_decode, vq_encode, vq_train, VqCodebook};
