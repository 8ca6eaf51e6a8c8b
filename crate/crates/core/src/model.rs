//! Generative models: the `P_M(· | z_t)` stand-ins the agents sample from.

use crate::distribution::Distribution;
use crate::error::Result;
use crate::vocab::{TokenId, Vocabulary};

/// A deterministic conditional next-token distribution.
///
/// `next_distribution` must be a pure function of the model parameters and
/// the prefix. Implementations may override [`GenerativeModel::context`] to
/// offer an incremental cursor; it must agree with `next_distribution` on
/// every prefix.
pub trait GenerativeModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<Distribution>;

    fn context(&self, prefix: &[TokenId]) -> Result<Box<dyn ModelContext + '_>> {
        Ok(Box::new(PrefixContext::new(self, prefix)?))
    }
}

/// Incremental generation cursor positioned after some prefix.
pub trait ModelContext {
    fn distribution(&self) -> Result<Distribution>;
    fn push(&mut self, token: TokenId) -> Result<()>;
}

/// Generic cursor that keeps the whole prefix and re-queries the model.
pub struct PrefixContext<'a, M: ?Sized> {
    model: &'a M,
    prefix: Vec<TokenId>,
}

impl<'a, M: GenerativeModel + ?Sized> PrefixContext<'a, M> {
    pub fn new(model: &'a M, prefix: &[TokenId]) -> Result<Self> {
        model.vocab().check(prefix)?;
        Ok(PrefixContext {
            model,
            prefix: prefix.to_vec(),
        })
    }
}

impl<M: GenerativeModel + ?Sized> ModelContext for PrefixContext<'_, M> {
    fn distribution(&self) -> Result<Distribution> {
        self.model.next_distribution(&self.prefix)
    }

    fn push(&mut self, token: TokenId) -> Result<()> {
        self.model.vocab().check(&[token])?;
        self.prefix.push(token);
        Ok(())
    }
}

/// History-free model returning the same distribution at every step.
///
/// Its per-step partition mass is known exactly, which makes the decoding
/// margin analytically computable.
#[derive(Clone, Debug)]
pub struct StaticModel {
    vocab: Vocabulary,
    dist: Distribution,
}

impl StaticModel {
    pub fn new(dist: Distribution) -> Self {
        StaticModel {
            vocab: Vocabulary::synthetic(dist.len()),
            dist,
        }
    }
}

impl GenerativeModel for StaticModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<Distribution> {
        self.vocab.check(prefix)?;
        Ok(self.dist.clone())
    }

    fn context(&self, prefix: &[TokenId]) -> Result<Box<dyn ModelContext + '_>> {
        self.vocab.check(prefix)?;
        Ok(Box::new(StaticContext(self)))
    }
}

struct StaticContext<'a>(&'a StaticModel);

impl ModelContext for StaticContext<'_> {
    fn distribution(&self) -> Result<Distribution> {
        Ok(self.0.dist.clone())
    }

    fn push(&mut self, token: TokenId) -> Result<()> {
        self.0.vocab.check(&[token])
    }
}
