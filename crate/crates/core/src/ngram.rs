//! Count-based n-gram model with additive smoothing.
//!
//! `order` is the number of context tokens. Contexts never seen in the corpus
//! back off to their longest seen suffix; the empty context (unigram counts)
//! always exists.

use std::collections::HashMap;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Clone, Debug, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<TokenId, u64>,
}

#[derive(Clone, Debug)]
pub struct NgramModel {
    vocab: Vocabulary,
    order: usize,
    alpha: f64,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

impl NgramModel {
    pub fn train(vocab: Vocabulary, corpus: &[TokenId], order: usize, alpha: f64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Ingestion("empty corpus".into()));
        }
        if corpus.len() <= order {
            return Err(Error::Ingestion(format!(
                "corpus of {} tokens too short for order {order}",
                corpus.len()
            )));
        }
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::Parameter(format!(
                "smoothing must be non-negative, got {alpha}"
            )));
        }
        vocab.check(corpus)?;
        let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
        for (pos, &next) in corpus.iter().enumerate() {
            for len in 0..=order.min(pos) {
                let entry = counts.entry(corpus[pos - len..pos].to_vec()).or_default();
                entry.total += 1;
                *entry.next.entry(next).or_default() += 1;
            }
        }
        Ok(NgramModel {
            vocab,
            order,
            alpha,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Raw `count(context ‖ x)` and `count(context)`.
    pub fn counts(&self, context: &[TokenId], x: TokenId) -> (u64, u64) {
        self.counts
            .get(context)
            .map(|c| (c.next.get(&x).copied().unwrap_or(0), c.total))
            .unwrap_or((0, 0))
    }
}

impl GenerativeModel for NgramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<Distribution> {
        self.vocab.check(prefix)?;
        let longest = self.order.min(prefix.len());
        let ctx = (0..=longest)
            .rev()
            .find_map(|len| self.counts.get(&prefix[prefix.len() - len..]))
            .expect("empty context always counted");
        let v = self.vocab.size() as f64;
        if self.alpha.is_infinite() {
            return Distribution::uniform(self.vocab.size());
        }
        let denom = ctx.total as f64 + self.alpha * v;
        let probs = (0..self.vocab.size() as u32)
            .map(|i| (ctx.next.get(&TokenId(i)).copied().unwrap_or(0) as f64 + self.alpha) / denom)
            .collect();
        Distribution::new(probs)
    }
}
