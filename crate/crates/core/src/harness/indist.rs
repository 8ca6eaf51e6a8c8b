//! Token-frequency indistinguishability: chi-square homogeneity tests
//! between pooled histograms of cover and stego runs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::codec::{encode_bit_in, EncodeOptions, StegoTrace};
use crate::config::{FramingMode, SecretKey, SecurityParams, StegoConfig};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::partition::derive_partition;
use crate::vocab::TokenId;

/// Minimum expected count per cell before bins are merged.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampler {
    Cover,
    /// ACF permuted-CDF sampling with one random secret bit per run.
    Stego,
    /// Plain sampling from `p^(1/t)`, renormalised. A deliberately biased
    /// positive control.
    Tempered(f64),
}

/// `n_runs` runs of `run_len` tokens, each started from a one-token random
/// prefix. Fully determined by `seed` and `label`.
pub fn generate_runs(
    model: &dyn GenerativeModel,
    sampler: Sampler,
    n_runs: usize,
    run_len: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<Vec<TokenId>>> {
    let vocab_size = model.vocab().size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut key = vec![0u8; 32];
    rng.fill(&mut key[..]);
    // The run length is the block; sizing does not matter for frequencies.
    let sec = SecurityParams {
        k: 1,
        margin_floor: 0.25,
        block_len: run_len,
        mode: FramingMode::Block,
    };
    let base = StegoConfig::new(SecretKey::new(key)?, sec, Vec::new());
    let pmap = derive_partition(vocab_size, &base)?;
    let mut runs = Vec::with_capacity(n_runs);
    for i in 0..n_runs {
        let start = TokenId(rng.random_range(0..vocab_size as u32));
        let cfg = base.with_session(format!("{label}-{i}").into_bytes());
        let mut stream = cfg.stream();
        let mut ctx = model.context(&[start])?;
        let tokens = match sampler {
            Sampler::Stego => {
                let s = rng.random_range(0..2u8);
                let mut trace = StegoTrace::default();
                encode_bit_in(
                    ctx.as_mut(),
                    s,
                    &cfg,
                    &pmap,
                    &mut stream,
                    &EncodeOptions::default(),
                    &mut trace,
                )?;
                trace.tokens
            }
            Sampler::Cover | Sampler::Tempered(_) => {
                let mut out = Vec::with_capacity(run_len);
                for _ in 0..run_len {
                    let mut d = ctx.distribution()?;
                    if let Sampler::Tempered(t) = sampler {
                        d = Distribution::from_weights(
                            d.probs().iter().map(|p| p.powf(1.0 / t)).collect(),
                        )?;
                    }
                    let tok = TokenId(d.inverse_cdf(stream.next_r()?) as u32);
                    ctx.push(tok)?;
                    out.push(tok);
                }
                out
            }
        };
        runs.push(tokens);
    }
    Ok(runs)
}

/// Chi-square test of homogeneity for two count vectors over the same bins.
/// Bins whose smaller-sample expected count is below 5 are pooled into one.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<(f64, usize, f64)> {
    if a.len() != b.len() {
        return Err(Error::domain("histograms have different bin counts"));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InsufficientSamples("empty histogram".into()));
    }
    let n = (na + nb) as f64;
    let small = na.min(nb) as f64;
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut rare = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        if col * small / n < MIN_EXPECTED {
            rare.0 += x;
            rare.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if rare.0 + rare.1 > 0 {
        cells.push(rare);
    }
    if cells.len() < 2 {
        return Ok((0.0, 0, 1.0));
    }
    let (fa, fb) = (na as f64 / n, nb as f64 / n);
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let col = (x + y) as f64;
            let (ea, eb) = (col * fa, col * fb);
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    let df = cells.len() - 1;
    let p = ChiSquared::new(df as f64)
        .map_err(|e| Error::domain(e.to_string()))?
        .sf(stat);
    Ok((stat, df, p))
}

fn histogram<'a>(runs: impl Iterator<Item = &'a Vec<TokenId>>, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for run in runs {
        for t in run {
            h[t.index()] += 1;
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistOptions {
    /// Runs drawn from each pool per replicate.
    pub split_size: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for IndistOptions {
    fn default() -> Self {
        IndistOptions {
            split_size: 100,
            replicates: 1000,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistSummary {
    pub replicates: usize,
    pub alpha: f64,
    pub rejection_rate: f64,
    pub median_p: f64,
    /// p-value of the test on the two full pools.
    pub pooled_p: f64,
}

/// Repeatedly draws `split_size` runs from each pool without replacement,
/// tests their pooled token histograms, and reports how often the test
/// rejects at `alpha`.
pub fn frequency_indistinguishability(
    a: &[Vec<TokenId>],
    b: &[Vec<TokenId>],
    vocab_size: usize,
    opts: &IndistOptions,
) -> Result<IndistSummary> {
    let need = opts.split_size.max(100);
    if a.len() < need || b.len() < need {
        return Err(Error::InsufficientSamples(format!(
            "need at least {need} runs per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if opts.replicates == 0 {
        return Err(Error::InsufficientSamples("zero replicates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ps = Vec::with_capacity(opts.replicates);
    for _ in 0..opts.replicates {
        let ia = sample(&mut rng, a.len(), opts.split_size);
        let ib = sample(&mut rng, b.len(), opts.split_size);
        let ha = histogram(ia.iter().map(|i| &a[i]), vocab_size);
        let hb = histogram(ib.iter().map(|i| &b[i]), vocab_size);
        ps.push(chi_square_homogeneity(&ha, &hb)?.2);
    }
    let rejections = ps.iter().filter(|&&p| p < opts.alpha).count();
    ps.sort_by(f64::total_cmp);
    let pooled_p = chi_square_homogeneity(
        &histogram(a.iter(), vocab_size),
        &histogram(b.iter(), vocab_size),
    )?
    .2;
    Ok(IndistSummary {
        replicates: opts.replicates,
        alpha: opts.alpha,
        rejection_rate: rejections as f64 / opts.replicates as f64,
        median_p: ps[ps.len() / 2],
        pooled_p,
    })
}
