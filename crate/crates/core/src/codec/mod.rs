//! The statistical communication layer.
//!
//! Encoding reorders the live distribution so the partition cell `V^(s)`
//! leads the cumulative mass and inverse-CDF samples with the shared draw
//! `r_t`; every token keeps its native marginal probability. Decoding replays
//! the draws and sums `f(r_t)` or `f(1 - r_t)` by each token's label, then
//! compares against `T/2`. The decoder never sees a model or a prefix.

mod calibrate;
mod decode;
mod encode;
mod record;
mod sampler;

pub use calibrate::{calibrate_margin, margin_from_masses};
pub use decode::{
    decide_bit, decode_message, decode_statistic, statistic_term, threshold, DecodeResult,
};
pub use encode::{encode_bit, encode_bit_in, encode_message, EncodeOptions, StegoTrace};
pub use record::{StegoRecord, METHOD_ACF, METHOD_BASELINE};
pub use sampler::{permuted_cdf_sample, permuted_order};
