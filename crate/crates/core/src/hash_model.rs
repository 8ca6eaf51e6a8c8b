//! Seeded hash model: a cheap, fully deterministic stand-in for an LLM whose
//! entropy and history sensitivity can be dialled in precisely.
//!
//! Logits are `(1-λ)·γ·u_local + λ·γ·u_global` where
//! `u = prf64(seed, digest ‖ i) / 2^64`. The local digest hashes the last `w`
//! prefix tokens; the global digest is a rolling hash of the full prefix.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::SecretKey;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::model::{GenerativeModel, ModelContext};
use crate::prf::{prf64_indexed, prf64_parts, unit_interval, RandomStream};
use crate::vocab::{TokenId, Vocabulary};

const WINDOW_DOMAIN: &[u8] = b"win";
const ROLL_DOMAIN: &[u8] = b"roll";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashModelParams {
    pub seed: String,
    pub vocab_size: usize,
    pub window: usize,
    pub mixing: f64,
    pub concentration: f64,
}

#[derive(Clone, Debug)]
pub struct HashModel {
    seed: Vec<u8>,
    vocab: Vocabulary,
    window: usize,
    mixing: f64,
    concentration: f64,
}

impl HashModel {
    pub fn new(
        seed: &[u8],
        vocab: Vocabulary,
        window: usize,
        mixing: f64,
        concentration: f64,
    ) -> Result<Self> {
        if seed.is_empty() {
            return Err(Error::Parameter("hash model seed must be non-empty".into()));
        }
        if window == 0 {
            return Err(Error::Parameter("window must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&mixing) {
            return Err(Error::Parameter(format!("mixing {mixing} outside [0, 1]")));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::Parameter(format!(
                "concentration must be positive, got {concentration}"
            )));
        }
        if vocab.size() > u32::MAX as usize {
            return Err(Error::Parameter("vocabulary too large".into()));
        }
        Ok(HashModel {
            seed: seed.to_vec(),
            vocab,
            window,
            mixing,
            concentration,
        })
    }

    pub fn from_params(p: &HashModelParams) -> Result<Self> {
        Self::new(
            p.seed.as_bytes(),
            Vocabulary::synthetic(p.vocab_size),
            p.window,
            p.mixing,
            p.concentration,
        )
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mixing(&self) -> f64 {
        self.mixing
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn with_concentration(&self, concentration: f64) -> Result<Self> {
        Self::new(
            &self.seed,
            self.vocab.clone(),
            self.window,
            self.mixing,
            concentration,
        )
    }

    fn initial_global(&self) -> u64 {
        prf64_parts(&self.seed, &[ROLL_DOMAIN])
    }

    fn roll(&self, global: u64, token: TokenId) -> u64 {
        prf64_parts(
            &self.seed,
            &[ROLL_DOMAIN, &global.to_be_bytes(), &token.0.to_be_bytes()],
        )
    }

    fn window_digest<'a>(&self, window: impl Iterator<Item = &'a TokenId>) -> u64 {
        let mut data = WINDOW_DOMAIN.to_vec();
        for t in window {
            data.extend_from_slice(&t.0.to_be_bytes());
        }
        prf64_parts(&self.seed, &[&data])
    }

    fn distribution_from_digests(&self, local: u64, global: u64) -> Result<Distribution> {
        let n = self.vocab.size();
        let mut logits = vec![0.0; n];
        let mut words = Vec::with_capacity(n);
        for (digest, weight) in [(local, 1.0 - self.mixing), (global, self.mixing)] {
            if weight == 0.0 {
                continue;
            }
            words.clear();
            prf64_indexed(&self.seed, &digest.to_be_bytes(), n as u32, &mut words);
            let scale = weight * self.concentration;
            for (l, &w) in logits.iter_mut().zip(&words) {
                *l += scale * unit_interval(w);
            }
        }
        Distribution::softmax(&logits)
    }

    /// Finds `γ` such that natural generation has mean per-step entropy
    /// `target_bits`, by bisection on `ln γ`.
    ///
    /// Entropy is measured over `steps` steps of plain sampling, restarted
    /// from a fresh random prefix every `run_len` steps. All randomness comes
    /// from `key`, so the result is reproducible.
    pub fn calibrate_concentration(
        &self,
        target_bits: f64,
        key: &SecretKey,
        steps: usize,
    ) -> Result<f64> {
        let max_bits = (self.vocab.size() as f64).log2();
        if !(target_bits > 0.0 && target_bits < max_bits) {
            return Err(Error::Calibration(format!(
                "target entropy {target_bits} outside (0, {max_bits})"
            )));
        }
        let (mut lo, mut hi) = (1e-3f64.ln(), 1e5f64.ln());
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let h = self
                .with_concentration(mid.exp())?
                .mean_sampled_entropy(key, steps, 32)?;
            if h > target_bits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Mean entropy (bits) of the live distribution along natural generation.
    pub fn mean_sampled_entropy(
        &self,
        key: &SecretKey,
        steps: usize,
        run_len: usize,
    ) -> Result<f64> {
        let mut stream = RandomStream::new(key.clone(), b"entropy-calibration".to_vec());
        let mut total = 0.0;
        let mut done = 0;
        let mut run = 0u64;
        while done < steps {
            let prefix: Vec<TokenId> = (0..self.window)
                .map(|j| {
                    let w = prf64_parts(
                        key.as_bytes(),
                        &[
                            b"calib-prefix",
                            &run.to_be_bytes(),
                            &(j as u64).to_be_bytes(),
                        ],
                    );
                    TokenId((w % self.vocab.size() as u64) as u32)
                })
                .collect();
            run += 1;
            let mut ctx = self.context(&prefix)?;
            for _ in 0..run_len.min(steps - done) {
                let d = ctx.distribution()?;
                total += d.entropy_bits();
                let t = TokenId(d.inverse_cdf(stream.next_r()?) as u32);
                ctx.push(t)?;
                done += 1;
            }
        }
        Ok(total / steps as f64)
    }
}

impl GenerativeModel for HashModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<Distribution> {
        self.vocab.check(prefix)?;
        let start = prefix.len().saturating_sub(self.window);
        let local = self.window_digest(prefix[start..].iter());
        let global = if self.mixing > 0.0 {
            prefix
                .iter()
                .fold(self.initial_global(), |g, &t| self.roll(g, t))
        } else {
            0
        };
        self.distribution_from_digests(local, global)
    }

    fn context(&self, prefix: &[TokenId]) -> Result<Box<dyn ModelContext + '_>> {
        self.vocab.check(prefix)?;
        let start = prefix.len().saturating_sub(self.window);
        let recent: VecDeque<TokenId> = prefix[start..].iter().copied().collect();
        let global = if self.mixing > 0.0 {
            prefix
                .iter()
                .fold(self.initial_global(), |g, &t| self.roll(g, t))
        } else {
            0
        };
        Ok(Box::new(HashContext {
            model: self,
            recent,
            global,
        }))
    }
}

struct HashContext<'a> {
    model: &'a HashModel,
    recent: VecDeque<TokenId>,
    global: u64,
}

impl ModelContext for HashContext<'_> {
    fn distribution(&self) -> Result<Distribution> {
        let local = self.model.window_digest(self.recent.iter());
        self.model.distribution_from_digests(local, self.global)
    }

    fn push(&mut self, token: TokenId) -> Result<()> {
        self.model.vocab.check(&[token])?;
        if self.recent.len() == self.model.window {
            self.recent.pop_front();
        }
        self.recent.push_back(token);
        if self.model.mixing > 0.0 {
            self.global = self.model.roll(self.global, token);
        }
        Ok(())
    }
}
