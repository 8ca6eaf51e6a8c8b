use crate::config::{FramingMode, StegoConfig};
use crate::error::{Error, Result};
use crate::model::{GenerativeModel, ModelContext};
use crate::partition::PartitionMap;
use crate::prf::RandomStream;
use crate::state::{AgentState, Role, Turn};
use crate::vocab::TokenId;

use super::sampler::permuted_cdf_sample;

/// Everything the encoder produced for one message.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StegoTrace {
    pub tokens: Vec<TokenId>,
    pub r_values: Vec<f64>,
    pub embedded_bits: Vec<u8>,
    /// Exclusive end offset of each bit's block; last equals `tokens.len()`.
    pub block_boundaries: Vec<usize>,
    /// Entropy (bits) of the live distribution at each step.
    pub step_entropy: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct EncodeOptions {
    /// Whole-sequence mode: a response ends once this token is sampled
    /// after at least `t_min` tokens.
    pub stop_token: Option<TokenId>,
    /// Whole-sequence mode: hard cap as a multiple of `t_min`.
    pub max_len_factor: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            stop_token: None,
            max_len_factor: 4,
        }
    }
}

/// Embeds one bit into the continuation of `ctx`, pushing every emitted
/// token back into it. Appends to `trace` and returns the block length.
pub fn encode_bit_in(
    ctx: &mut dyn ModelContext,
    s: u8,
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    stream: &mut RandomStream,
    opts: &EncodeOptions,
    trace: &mut StegoTrace,
) -> Result<usize> {
    if s > 1 {
        return Err(Error::domain("secret bit must be 0 or 1"));
    }
    let (min_len, max_len) = match cfg.sec.mode {
        FramingMode::Block => (cfg.sec.block_len, cfg.sec.block_len),
        FramingMode::WholeSequence => {
            let t = cfg.sec.t_min();
            (t, t * opts.max_len_factor.max(1))
        }
    };
    let mut emitted = 0;
    while emitted < max_len {
        let dist = ctx.distribution()?;
        let r = stream.next_r()?;
        let token = permuted_cdf_sample(&dist, pmap, s, r)?;
        ctx.push(token)?;
        trace.tokens.push(token);
        trace.r_values.push(r);
        trace.step_entropy.push(dist.entropy_bits());
        emitted += 1;
        if emitted >= min_len
            && (cfg.sec.mode == FramingMode::Block || opts.stop_token.is_none_or(|t| t == token))
        {
            break;
        }
    }
    trace.embedded_bits.push(s);
    trace.block_boundaries.push(trace.tokens.len());
    Ok(emitted)
}

/// Embeds `s` as the encoder's next response. Returns the emitted tokens and
/// the state with that response appended as an agent turn.
pub fn encode_bit(
    model: &dyn GenerativeModel,
    state: &AgentState,
    s: u8,
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    stream: &mut RandomStream,
) -> Result<(Vec<TokenId>, AgentState)> {
    let mut ctx = model.context(&state.prefix())?;
    let mut trace = StegoTrace::default();
    encode_bit_in(
        ctx.as_mut(),
        s,
        cfg,
        pmap,
        stream,
        &EncodeOptions::default(),
        &mut trace,
    )?;
    let mut next = state.clone();
    next.public_history
        .push(Turn::new(Role::Agent, trace.tokens.clone())?);
    Ok((trace.tokens, next))
}

/// Embeds `bits` back to back in one continuous generation from `state`.
pub fn encode_message(
    model: &dyn GenerativeModel,
    state: &AgentState,
    bits: &[u8],
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    stream: &mut RandomStream,
    opts: &EncodeOptions,
) -> Result<StegoTrace> {
    if pmap.vocab_size() != model.vocab().size() {
        return Err(Error::domain(
            "partition does not cover the model vocabulary",
        ));
    }
    let mut ctx = model.context(&state.prefix())?;
    let mut trace = StegoTrace::default();
    for &s in bits {
        encode_bit_in(ctx.as_mut(), s, cfg, pmap, stream, opts, &mut trace)?;
    }
    Ok(trace)
}
