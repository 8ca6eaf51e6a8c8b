//! Simplified symmetric (prefix-dependent) codec used as the contrast case.
//!
//! Each step draws shared `r`; the two candidates are the plain inverse-CDF
//! samples at `r` and at `r + 1/2 (mod 1)`. When they differ the encoder
//! emits the candidate indexed by the secret bit. The decoder must rebuild
//! both candidates from its own distribution, so it only works when its
//! prefix matches the encoder's.

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::prf::RandomStream;
use crate::state::AgentState;
use crate::vocab::TokenId;

fn candidates(dist: &Distribution, r: f64) -> Result<(TokenId, TokenId)> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("draw {r} outside [0, 1)")));
    }
    let shifted = (r + 0.5).fract();
    Ok((
        TokenId(dist.inverse_cdf(r) as u32),
        TokenId(dist.inverse_cdf(shifted) as u32),
    ))
}

/// Returns the emitted token and whether a bit was embedded.
pub fn baseline_encode_step(dist: &Distribution, r: f64, s: u8) -> Result<(TokenId, bool)> {
    if s > 1 {
        return Err(Error::domain("secret bit must be 0 or 1"));
    }
    let (c0, c1) = candidates(dist, r)?;
    if c0 == c1 {
        Ok((c0, false))
    } else {
        Ok((if s == 0 { c0 } else { c1 }, true))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepDecode {
    NoBit,
    Bit(u8),
    /// Received token matches neither candidate. Counted as bit 0.
    Desync,
}

pub fn baseline_decode_step(
    received: TokenId,
    decoder_dist: &Distribution,
    r: f64,
) -> Result<StepDecode> {
    if received.index() >= decoder_dist.len() {
        return Err(Error::domain(format!(
            "token {received} outside distribution"
        )));
    }
    let (c0, c1) = candidates(decoder_dist, r)?;
    Ok(if c0 == c1 {
        StepDecode::NoBit
    } else if received == c0 {
        StepDecode::Bit(0)
    } else if received == c1 {
        StepDecode::Bit(1)
    } else {
        StepDecode::Desync
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BaselineTrace {
    pub tokens: Vec<TokenId>,
    pub bits_embedded: Vec<u8>,
    pub embed_positions: Vec<usize>,
    pub step_entropy: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BaselineDecode {
    pub bits: Vec<u8>,
    pub positions: Vec<usize>,
    pub desync_count: usize,
}

/// Generates from the encoder's state until every bit is embedded or
/// `max_steps` tokens have been produced.
pub fn baseline_encode_message(
    model: &dyn GenerativeModel,
    encoder_state: &AgentState,
    bits: &[u8],
    stream: &mut RandomStream,
    max_steps: usize,
) -> Result<BaselineTrace> {
    let mut ctx = model.context(&encoder_state.prefix())?;
    let mut trace = BaselineTrace::default();
    let mut next_bit = 0;
    while next_bit < bits.len() && trace.tokens.len() < max_steps {
        let dist = ctx.distribution()?;
        let (token, embedded) = baseline_encode_step(&dist, stream.next_r()?, bits[next_bit])?;
        if embedded {
            trace.bits_embedded.push(bits[next_bit]);
            trace.embed_positions.push(trace.tokens.len());
            next_bit += 1;
        }
        trace.step_entropy.push(dist.entropy_bits());
        trace.tokens.push(token);
        ctx.push(token)?;
    }
    Ok(trace)
}

/// Replays the received tokens against the decoder's own, possibly
/// divergent, prefix.
pub fn baseline_decode_message(
    model: &dyn GenerativeModel,
    decoder_state: &AgentState,
    tokens: &[TokenId],
    stream: &mut RandomStream,
) -> Result<BaselineDecode> {
    let mut ctx = model.context(&decoder_state.prefix())?;
    let mut out = BaselineDecode::default();
    for (pos, &token) in tokens.iter().enumerate() {
        let dist = ctx.distribution()?;
        match baseline_decode_step(token, &dist, stream.next_r()?)? {
            StepDecode::NoBit => {}
            StepDecode::Bit(b) => {
                out.bits.push(b);
                out.positions.push(pos);
            }
            StepDecode::Desync => {
                out.bits.push(0);
                out.positions.push(pos);
                out.desync_count += 1;
            }
        }
        ctx.push(token)?;
    }
    Ok(out)
}
