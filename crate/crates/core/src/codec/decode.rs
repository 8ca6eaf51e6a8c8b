use crate::config::{FramingMode, SamplingFunction, StegoConfig};
use crate::error::{Error, Result};
use crate::partition::PartitionMap;
use crate::prf::RandomStream;
use crate::vocab::TokenId;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub statistics: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `exp(-2 · min_block_len · δ̄²)`; zero when nothing was decoded.
    pub error_bound: f64,
}

/// One summand of `Λ`: `f(r)` for a label-0 token, `f(1 - r)` for label 1.
#[inline]
pub fn statistic_term(label: u8, r: f64, f: &SamplingFunction) -> f64 {
    if label == 0 {
        f.apply(r)
    } else {
        f.apply(1.0 - r)
    }
}

/// `Λ(X)` over `tokens`, replaying one draw per token from `stream`.
///
/// ```
/// use acf_core::{decode_statistic, FramingMode, PartitionMap, SecretKey, SecurityParams, StegoConfig, TokenId};
///
/// let cfg = StegoConfig::new(
///     SecretKey::new(vec![1; 16]).unwrap(),
///     SecurityParams::new(8, 0.25, None, FramingMode::Block).unwrap(),
///     b"doc".to_vec(),
/// );
/// let pmap = PartitionMap::from_labels(vec![0, 1]).unwrap();
/// assert_eq!(decode_statistic(&[], &cfg, &pmap, &mut cfg.stream()).unwrap(), 0.0);
/// ```
pub fn decode_statistic(
    tokens: &[TokenId],
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    stream: &mut RandomStream,
) -> Result<f64> {
    let mut lambda = 0.0;
    for &t in tokens {
        let label = pmap.label(t)?;
        lambda += statistic_term(label, stream.next_r()?, &cfg.f);
    }
    Ok(lambda)
}

/// The symmetric threshold `τ = T/2`.
#[inline]
pub fn threshold(block_len: usize) -> f64 {
    block_len as f64 / 2.0
}

/// `ŝ = 1` iff `Λ ≥ τ`.
pub fn decide_bit(lambda: f64, block_len: usize, _cfg: &StegoConfig) -> u8 {
    (lambda >= threshold(block_len)) as u8
}

/// Decodes one bit per block. Block mode additionally requires every block
/// to be exactly `cfg.sec.block_len` tokens long.
pub fn decode_message(
    tokens: &[TokenId],
    block_boundaries: &[usize],
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    stream: &mut RandomStream,
) -> Result<DecodeResult> {
    check_framing(tokens.len(), block_boundaries, cfg)?;
    let mut out = DecodeResult::default();
    let mut start = 0;
    let mut min_len = usize::MAX;
    for &end in block_boundaries {
        let block = &tokens[start..end];
        let lambda = decode_statistic(block, cfg, pmap, stream)?;
        out.bits.push(decide_bit(lambda, block.len(), cfg));
        out.statistics.push(lambda);
        out.thresholds.push(threshold(block.len()));
        min_len = min_len.min(block.len());
        start = end;
    }
    if !block_boundaries.is_empty() {
        let d = cfg.sec.margin_floor;
        out.error_bound = (-2.0 * min_len as f64 * d * d).exp();
    }
    Ok(out)
}

fn check_framing(n_tokens: usize, boundaries: &[usize], cfg: &StegoConfig) -> Result<()> {
    match boundaries.last() {
        None if n_tokens == 0 => return Ok(()),
        None => {
            return Err(Error::Framing(format!(
                "{n_tokens} tokens but no block boundaries"
            )))
        }
        Some(&last) if last != n_tokens => {
            return Err(Error::Framing(format!(
                "last boundary {last} but {n_tokens} tokens"
            )))
        }
        _ => {}
    }
    let mut start = 0;
    for &end in boundaries {
        if end <= start {
            return Err(Error::Framing(
                "block boundaries must be strictly increasing".into(),
            ));
        }
        if cfg.sec.mode == FramingMode::Block && end - start != cfg.sec.block_len {
            return Err(Error::Framing(format!(
                "block of {} tokens, expected {}",
                end - start,
                cfg.sec.block_len
            )));
        }
        start = end;
    }
    Ok(())
}
