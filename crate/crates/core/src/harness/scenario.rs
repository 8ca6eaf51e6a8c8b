use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::FramingMode;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::hash_model::HashModel;
use crate::model::{GenerativeModel, StaticModel};
use crate::ngram::NgramModel;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain sampling, no embedding (cover text).
    Normal,
    Acf,
    Baseline,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Normal => "normal",
            Method::Acf => "acf",
            Method::Baseline => "baseline",
        }
    }
}

/// A generative model described in a scenario or model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Hash {
        seed: String,
        vocab_size: usize,
        window: usize,
        mixing: f64,
        concentration: f64,
    },
    /// n-gram model over a whitespace-tokenised text corpus.
    Ngram {
        corpus: PathBuf,
        order: usize,
        alpha: f64,
    },
    /// n-gram model over a synthetic corpus of i.i.d. Zipf-distributed tokens.
    ZipfNgram {
        seed: u64,
        vocab_size: usize,
        corpus_len: usize,
        exponent: f64,
        order: usize,
        alpha: f64,
    },
    Static {
        probs: Vec<f64>,
    },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Hash {
            seed: "acf-desk".into(),
            vocab_size: 256,
            window: 8,
            mixing: 0.0,
            concentration: 200.0,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn GenerativeModel>> {
        Ok(match self {
            ModelSpec::Hash {
                seed,
                vocab_size,
                window,
                mixing,
                concentration,
            } => Box::new(HashModel::new(
                seed.as_bytes(),
                Vocabulary::synthetic(*vocab_size),
                *window,
                *mixing,
                *concentration,
            )?),
            ModelSpec::Ngram {
                corpus,
                order,
                alpha,
            } => {
                let text = std::fs::read_to_string(corpus)?;
                let (vocab, ids) = Vocabulary::from_corpus_text(&text)?;
                Box::new(NgramModel::train(vocab, &ids, *order, *alpha)?)
            }
            ModelSpec::ZipfNgram {
                seed,
                vocab_size,
                corpus_len,
                exponent,
                order,
                alpha,
            } => {
                let corpus = zipf_corpus(*seed, *vocab_size, *corpus_len, *exponent)?;
                Box::new(NgramModel::train(
                    Vocabulary::synthetic(*vocab_size),
                    &corpus,
                    *order,
                    *alpha,
                )?)
            }
            ModelSpec::Static { probs } => {
                Box::new(StaticModel::new(Distribution::new(probs.clone())?))
            }
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("model spec: {e}")))
    }
}

/// I.i.d. tokens with `P(i) ∝ (i + 1)^-exponent`.
pub fn zipf_corpus(
    seed: u64,
    vocab_size: usize,
    len: usize,
    exponent: f64,
) -> Result<Vec<TokenId>> {
    let weights: Vec<f64> = (0..vocab_size)
        .map(|i| ((i + 1) as f64).powf(-exponent))
        .collect();
    let dist = Distribution::from_weights(weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len)
        .map(|_| TokenId(dist.inverse_cdf(rng.random::<f64>()) as u32))
        .collect())
}

/// A state mutation applied to one party before generation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateOp {
    /// Drop the `delta` oldest public turns.
    Truncate { delta: usize },
    /// Append a private summary of `len` tokens.
    Summary { len: usize },
    /// Retrieve `n_chunks` chunks from the private memory pool.
    Retrieve { n_chunks: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolSpec {
    pub chunks: usize,
    pub chunk_len: usize,
}

impl Default for PoolSpec {
    fn default() -> Self {
        // 10k tokens.
        PoolSpec {
            chunks: 100,
            chunk_len: 100,
        }
    }
}

/// One experiment cell: a method run over `trials` independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub method: Method,
    pub k: u32,
    pub trials: usize,
    pub bits_per_trial: usize,
    pub seed: u64,
    pub initial_shared_turns: usize,
    pub turn_len: usize,
    pub model: ModelSpec,
    pub encoder_ops: Vec<StateOp>,
    pub decoder_ops: Vec<StateOp>,
    pub pool: PoolSpec,
    /// Fixed margin; calibrated from the model when absent.
    pub margin: Option<f64>,
    pub block_len: Option<usize>,
    pub mode: FramingMode,
    pub calibration_steps: usize,
    /// Tokens generated per trial by the `normal` method.
    pub cover_tokens: usize,
    /// Baseline encoder gives up after `bits · max_steps_per_bit` tokens.
    pub max_steps_per_bit: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "scenario".into(),
            method: Method::Acf,
            k: 12,
            trials: 100,
            bits_per_trial: 8,
            seed: 1,
            initial_shared_turns: 5,
            turn_len: 2,
            model: ModelSpec::default(),
            encoder_ops: Vec::new(),
            decoder_ops: Vec::new(),
            pool: PoolSpec::default(),
            margin: None,
            block_len: None,
            mode: FramingMode::Block,
            calibration_steps: 2000,
            cover_tokens: 512,
            max_steps_per_bit: 64,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scenario {:?}: {m}", self.name)));
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.method != Method::Normal && self.bits_per_trial == 0 {
            return bad("bits_per_trial must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.initial_shared_turns == 0 || self.turn_len == 0 {
            return bad("initial history must be non-empty".into());
        }
        for op in self.encoder_ops.iter().chain(&self.decoder_ops) {
            match *op {
                StateOp::Truncate { delta } if delta > self.initial_shared_turns => {
                    return bad(format!(
                        "cannot truncate {delta} of {} turns",
                        self.initial_shared_turns
                    ))
                }
                StateOp::Summary { len: 0 } => return bad("summary must be non-empty".into()),
                StateOp::Retrieve { n_chunks } if n_chunks == 0 || n_chunks > self.pool.chunks => {
                    return bad(format!(
                        "cannot retrieve {n_chunks} of {} chunks",
                        self.pool.chunks
                    ))
                }
                _ => {}
            }
        }
        if let Some(m) = self.margin {
            crate::config::t_min(self.k, m)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }
}
