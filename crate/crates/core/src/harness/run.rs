use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{baseline_decode_message, baseline_encode_message};
use crate::codec::{calibrate_margin, decode_message, encode_message, DecodeResult, EncodeOptions};
use crate::config::{SecretKey, SecurityParams, StegoConfig};
use crate::error::Result;
use crate::model::GenerativeModel;
use crate::partition::{derive_partition, PartitionMap};
use crate::state::{random_tokens, AgentState, MemoryPool, Role, Turn};
use crate::vocab::TokenId;

use super::scenario::{Method, Scenario, StateOp};

/// Everything measured in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub sent_bits: Vec<u8>,
    /// Aligned with `sent_bits`; positions the decoder never produced read as 0.
    pub recovered_bits: Vec<u8>,
    pub token_count: usize,
    pub step_entropy: Vec<f64>,
    pub desync_count: usize,
    /// Decoder produced a different number of bits than were sent.
    pub framing_mismatch: bool,
}

/// The records of one scenario plus the channel sizing it used.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub records: Vec<TrialRecord>,
    pub margin: Option<f64>,
    pub block_len: Option<usize>,
}

/// Shared, trial-independent material derived from the scenario seed.
pub struct Setup {
    pub model: Box<dyn GenerativeModel>,
    pub cfg: StegoConfig,
    pub pmap: PartitionMap,
    pub pool: Option<MemoryPool>,
}

fn scenario_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_SETUP: u64 = 0;
const STREAM_CALIBRATION: u64 = 1;
const STREAM_TRIAL_BASE: u64 = 16;

impl Setup {
    pub fn new(sc: &Scenario) -> Result<Self> {
        sc.validate()?;
        let model = sc.model.build()?;
        let mut rng = scenario_rng(sc.seed, STREAM_SETUP);
        let mut key = vec![0u8; 32];
        rng.fill(&mut key[..]);
        let sk = SecretKey::new(key)?;
        // Placeholder sizing; replaced once the margin is known.
        let sec = SecurityParams::new(sc.k, 0.25, None, sc.mode)?;
        let cfg = StegoConfig::new(sk, sec, b"setup".to_vec());
        let pmap = derive_partition(model.vocab().size(), &cfg)?;
        let needs_pool = sc
            .encoder_ops
            .iter()
            .chain(&sc.decoder_ops)
            .any(|op| matches!(op, StateOp::Retrieve { .. }));
        let pool = needs_pool.then(|| {
            MemoryPool::synthetic(
                &mut rng,
                model.vocab().size(),
                sc.pool.chunks,
                sc.pool.chunk_len,
            )
        });
        let mut setup = Setup {
            model,
            cfg,
            pmap,
            pool,
        };
        if sc.method == Method::Acf {
            let margin = match sc.margin {
                Some(m) => m,
                None => setup.calibrate(sc)?,
            };
            setup.cfg.sec = SecurityParams::new(sc.k, margin, sc.block_len, sc.mode)?;
        }
        Ok(setup)
    }

    /// Margin from natural generation on encoder-side states drawn like
    /// trial states but from a separate stream.
    fn calibrate(&self, sc: &Scenario) -> Result<f64> {
        let mut rng = scenario_rng(sc.seed, STREAM_CALIBRATION);
        let states = (0..16)
            .map(|_| {
                let shared = initial_state(&mut rng, sc, self.model.vocab().size());
                apply_ops(
                    &shared,
                    &sc.encoder_ops,
                    &mut rng,
                    self.pool.as_ref(),
                    self.model.vocab().size(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        calibrate_margin(
            self.model.as_ref(),
            &states,
            &self.cfg,
            &self.pmap,
            sc.calibration_steps,
        )
    }
}

fn initial_state<R: Rng>(rng: &mut R, sc: &Scenario, vocab_size: usize) -> AgentState {
    AgentState::random(rng, vocab_size, sc.initial_shared_turns, sc.turn_len)
}

/// Applies `ops` in order. Retrieval queries with the latest public turn.
pub fn apply_ops<R: Rng>(
    state: &AgentState,
    ops: &[StateOp],
    rng: &mut R,
    pool: Option<&MemoryPool>,
    vocab_size: usize,
) -> Result<AgentState> {
    let mut s = state.clone();
    for op in ops {
        s = match *op {
            StateOp::Truncate { delta } => s.truncate_history(delta)?,
            StateOp::Summary { len } => s.append_private_summary(Turn::new(
                Role::System,
                random_tokens(rng, vocab_size, len),
            )?)?,
            StateOp::Retrieve { n_chunks } => {
                let query: Vec<TokenId> = s
                    .public_history
                    .last()
                    .map(|t| t.tokens.clone())
                    .unwrap_or_default();
                let pool = pool
                    .ok_or_else(|| crate::Error::Config("retrieval needs a memory pool".into()))?;
                s.inject_retrieval(pool, &query, n_chunks)?
            }
        };
    }
    Ok(s)
}

/// What the receiving side recovered from one message.
#[derive(Clone, Debug, PartialEq)]
pub enum Received {
    Acf(DecodeResult),
    Baseline { bits: Vec<u8>, desync_count: usize },
}

/// The receiving side of a trial. ACF decoding consults only the shared
/// config and the received tokens; `decoder_state` and `model` are used by
/// the baseline alone.
pub fn receive(
    method: Method,
    setup: &Setup,
    decoder_state: &AgentState,
    session_id: &[u8],
    tokens: &[TokenId],
    block_boundaries: &[usize],
) -> Result<Received> {
    let cfg = setup.cfg.with_session(session_id.to_vec());
    match method {
        Method::Acf => {
            let out = decode_message(
                tokens,
                block_boundaries,
                &cfg,
                &setup.pmap,
                &mut cfg.stream(),
            )?;
            Ok(Received::Acf(out))
        }
        Method::Baseline | Method::Normal => {
            let out = baseline_decode_message(
                setup.model.as_ref(),
                decoder_state,
                tokens,
                &mut cfg.stream(),
            )?;
            Ok(Received::Baseline {
                bits: out.bits,
                desync_count: out.desync_count,
            })
        }
    }
}

pub fn session_id(trial: usize) -> Vec<u8> {
    format!("trial-{trial}").into_bytes()
}

/// One trial: both parties start from the same shared history, diverge by
/// their own ops, then the encoder sends `bits_per_trial` random bits.
pub fn run_trial(sc: &Scenario, setup: &Setup, trial: usize) -> Result<TrialRecord> {
    let vocab_size = setup.model.vocab().size();
    let mut rng = scenario_rng(sc.seed, STREAM_TRIAL_BASE + trial as u64);
    let shared = initial_state(&mut rng, sc, vocab_size);
    let sent: Vec<u8> = match sc.method {
        Method::Normal => Vec::new(),
        _ => (0..sc.bits_per_trial)
            .map(|_| rng.random_range(0..2u8))
            .collect(),
    };
    let enc = apply_ops(
        &shared,
        &sc.encoder_ops,
        &mut rng,
        setup.pool.as_ref(),
        vocab_size,
    )?;
    let dec = apply_ops(
        &shared,
        &sc.decoder_ops,
        &mut rng,
        setup.pool.as_ref(),
        vocab_size,
    )?;
    let sid = session_id(trial);
    let cfg = setup.cfg.with_session(sid.clone());
    let model = setup.model.as_ref();

    let (tokens, boundaries, step_entropy) = match sc.method {
        Method::Normal => {
            let mut ctx = model.context(&enc.prefix())?;
            let mut stream = cfg.stream();
            let mut tokens = Vec::with_capacity(sc.cover_tokens);
            let mut ent = Vec::with_capacity(sc.cover_tokens);
            for _ in 0..sc.cover_tokens {
                let d = ctx.distribution()?;
                ent.push(d.entropy_bits());
                let t = TokenId(d.inverse_cdf(stream.next_r()?) as u32);
                ctx.push(t)?;
                tokens.push(t);
            }
            (tokens, Vec::new(), ent)
        }
        Method::Acf => {
            let trace = encode_message(
                model,
                &enc,
                &sent,
                &cfg,
                &setup.pmap,
                &mut cfg.stream(),
                &EncodeOptions::default(),
            )?;
            (trace.tokens, trace.block_boundaries, trace.step_entropy)
        }
        Method::Baseline => {
            let max_steps = sc.bits_per_trial * sc.max_steps_per_bit;
            let trace = baseline_encode_message(model, &enc, &sent, &mut cfg.stream(), max_steps)?;
            (trace.tokens, Vec::new(), trace.step_entropy)
        }
    };

    let (decoded, desync_count) = match sc.method {
        Method::Normal => (Vec::new(), 0),
        m => match receive(m, setup, &dec, &sid, &tokens, &boundaries)? {
            Received::Acf(out) => (out.bits, 0),
            Received::Baseline { bits, desync_count } => (bits, desync_count),
        },
    };
    let recovered: Vec<u8> = (0..sent.len())
        .map(|i| decoded.get(i).copied().unwrap_or(0))
        .collect();
    Ok(TrialRecord {
        trial,
        framing_mismatch: decoded.len() != sent.len(),
        sent_bits: sent,
        recovered_bits: recovered,
        token_count: tokens.len(),
        step_entropy,
        desync_count,
    })
}

/// Runs every trial of `sc`. Trials are independent and may run in
/// parallel; records come back in trial order.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioRun> {
    let setup = Setup::new(sc)?;
    let records = (0..sc.trials)
        .into_par_iter()
        .map(|i| run_trial(sc, &setup, i))
        .collect::<Result<Vec<_>>>()?;
    let acf = sc.method == Method::Acf;
    Ok(ScenarioRun {
        scenario: sc.clone(),
        records,
        margin: acf.then_some(setup.cfg.sec.margin_floor),
        block_len: acf.then_some(setup.cfg.sec.block_len),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::ModelSpec;

    fn small(method: Method) -> Scenario {
        Scenario {
            name: "small".into(),
            method,
            k: 4,
            trials: 4,
            bits_per_trial: 4,
            model: ModelSpec::Hash {
                seed: "small".into(),
                vocab_size: 64,
                window: 8,
                mixing: 0.0,
                concentration: 20.0,
            },
            ..Default::default()
        }
    }

    #[test]
    fn acf_symmetric_small_run() {
        let run = run_scenario(&small(Method::Acf)).unwrap();
        assert_eq!(run.records.len(), 4);
        for r in &run.records {
            assert_eq!(r.sent_bits, r.recovered_bits);
            assert_eq!(r.token_count, 4 * run.block_len.unwrap());
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let sc = small(Method::Baseline);
        assert_eq!(run_scenario(&sc).unwrap(), run_scenario(&sc).unwrap());
    }

    #[test]
    fn normal_emits_cover_tokens() {
        let sc = Scenario {
            cover_tokens: 50,
            ..small(Method::Normal)
        };
        let run = run_scenario(&sc).unwrap();
        assert!(run
            .records
            .iter()
            .all(|r| r.token_count == 50 && r.sent_bits.is_empty()));
        assert!(run.margin.is_none());
    }

    #[test]
    fn retrieval_grows_encoder_prefix_only() {
        let sc = Scenario {
            encoder_ops: vec![StateOp::Retrieve { n_chunks: 2 }],
            ..small(Method::Acf)
        };
        let setup = Setup::new(&sc).unwrap();
        let mut rng = scenario_rng(1, 99);
        let shared = initial_state(&mut rng, &sc, 64);
        let enc = apply_ops(&shared, &sc.encoder_ops, &mut rng, setup.pool.as_ref(), 64).unwrap();
        assert_eq!(enc.prefix().len(), shared.prefix().len() + 200);
        assert_eq!(setup.pool.as_ref().unwrap().total_tokens(), 10_000);
    }
}
