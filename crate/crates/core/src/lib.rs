//! Prefix-independent covert communication between generative agents.
//!
//! Two agents share a configuration (key, sampling function, security
//! parameter, mapping rule) but not their dialogue state. The encoder embeds
//! each secret bit by reordering its live next-token distribution around a
//! keyed vocabulary partition and sampling with a shared pseudorandom draw;
//! the decoder recovers the bit from the received tokens and the replayed
//! draws alone, with no model and no prefix.
//!
//! The crate also carries a prefix-dependent baseline codec, synthetic
//! generative models with controllable history sensitivity, agent states
//! with truncation / private summary / retrieval operations, and an
//! experiment harness that measures BER, effective capacity, entropy and
//! token-frequency indistinguishability.

pub mod baseline;
pub mod codec;
pub mod config;
pub mod distribution;
mod error;
pub mod harness;
pub mod hash_model;
pub mod model;
pub mod ngram;
pub mod partition;
pub mod prf;
pub mod state;
pub mod vocab;

pub use baseline::{
    baseline_decode_message, baseline_decode_step, baseline_encode_message, baseline_encode_step,
    BaselineDecode, BaselineTrace, StepDecode,
};
pub use codec::{
    calibrate_margin, decide_bit, decode_message, decode_statistic, encode_bit, encode_message,
    permuted_cdf_sample, DecodeResult, EncodeOptions, StegoRecord, StegoTrace,
};
pub use config::{
    t_min, ConfigFile, FramingMode, MappingRule, SamplingFunction, SecretKey, SecurityParams,
    StegoConfig,
};
pub use distribution::Distribution;
pub use error::{Error, Result};
pub use hash_model::{HashModel, HashModelParams};
pub use model::{GenerativeModel, ModelContext, StaticModel};
pub use ngram::NgramModel;
pub use partition::{derive_partition, partition_label, PartitionMap};
pub use prf::{prf64, RandomStream};
pub use state::{AgentState, Chunk, MemoryPool, Role, Turn};
pub use vocab::{TokenId, Vocabulary};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/asymmetry.md")]
    mod asymmetry {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
