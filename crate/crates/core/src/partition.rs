//! Keyed, prefix-independent two-colouring `Π` of the vocabulary.

use crate::config::StegoConfig;
use crate::error::{Error, Result};
use crate::prf::{prf64_parts, PARTITION_DOMAIN};
use crate::vocab::TokenId;

/// Partition labels, one bit per token index. Nothing here knows about
/// prefixes or models: labels are a function of `(token id, Θ)` alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMap {
    labels: Vec<u8>,
}

impl PartitionMap {
    /// Wraps explicit labels. Mostly useful for tests and synthetic setups.
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::DegenerateVocabulary(labels.len()));
        }
        if labels.iter().any(|&b| b > 1) {
            return Err(Error::domain("partition labels must be 0 or 1"));
        }
        Ok(PartitionMap { labels })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn vocab_size(&self) -> usize {
        self.labels.len()
    }

    /// `Π(x)`. The signature deliberately has no prefix argument.
    #[inline]
    pub fn label(&self, token: TokenId) -> Result<u8> {
        self.labels.get(token.index()).copied().ok_or_else(|| {
            Error::domain(format!(
                "token {} outside partition of size {}",
                token.0,
                self.labels.len()
            ))
        })
    }

    /// Total probability mass on tokens labelled `s`.
    pub fn mass(&self, probs: &[f64], s: u8) -> f64 {
        probs
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == s)
            .map(|(p, _)| p)
            .sum()
    }
}

/// `labels[i] = lowbit(prf64(sk, "part" ‖ i_be32)) XOR complement`.
pub fn derive_partition(vocab_size: usize, cfg: &StegoConfig) -> Result<PartitionMap> {
    if vocab_size < 2 {
        return Err(Error::DegenerateVocabulary(vocab_size));
    }
    if vocab_size > u32::MAX as usize {
        return Err(Error::domain("vocabulary too large for 32-bit token ids"));
    }
    let flip = cfg.rule.complement as u8;
    let labels = (0..vocab_size as u32)
        .map(|i| {
            let word = prf64_parts(cfg.sk.as_bytes(), &[PARTITION_DOMAIN, &i.to_be_bytes()]);
            (word & 1) as u8 ^ flip
        })
        .collect();
    Ok(PartitionMap { labels })
}

/// Free-function form of [`PartitionMap::label`].
pub fn partition_label(token: TokenId, pmap: &PartitionMap) -> Result<u8> {
    pmap.label(token)
}
