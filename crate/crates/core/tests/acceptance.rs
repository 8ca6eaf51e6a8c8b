//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use acf_core::codec::statistic_term;
use acf_core::distribution::Distribution;
use acf_core::harness::{
    eic, receive, run_indist, run_scenario, session_id, sweep_progressive_asymmetry,
    ExperimentReport, Method, Received, ReportRow, Scenario, Setup, Suite,
};
use acf_core::model::StaticModel;
use acf_core::partition::PartitionMap;
use acf_core::prf::RandomStream;
use acf_core::state::{AgentState, Role, Turn};
use acf_core::vocab::TokenId;
use acf_core::{
    decode_message, encode_message, permuted_cdf_sample, t_min, EncodeOptions, FramingMode,
    SamplingFunction, SecretKey, SecurityParams, StegoConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use common::interval_masses;

const FIG2: &str = include_str!("../../../scenarios/fig2.toml");
const TABLE1: &str = include_str!("../../../scenarios/tableI-statistical.toml");

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn key(byte: u8) -> SecretKey {
    SecretKey::new(vec![byte; 32]).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut broken = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let weights: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.15) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let Ok(dist) = Distribution::from_weights(weights) else {
            continue;
        };
        let pmap =
            PartitionMap::from_labels((0..n).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let s = rng.random_range(0..2u8);
        let sample = |r: f64| permuted_cdf_sample(&dist, &pmap, s, r).unwrap().index();
        match interval_masses(&sample, n) {
            Some(m) => {
                for (got, want) in m.iter().zip(dist.probs()) {
                    worst = worst.max((got - want).abs());
                }
            }
            None => broken += 1,
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-12 && broken == 0 && t < Duration::from_secs(1),
        format!("max |mass - p| = {worst:.3e}, non-contiguous cases {broken}, {t:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let n = 100_000;
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, &p) in [0.1, 0.3, 0.5, 0.7, 0.9].iter().enumerate() {
        let dist = Distribution::new(vec![p, 1.0 - p]).unwrap();
        let pmap = PartitionMap::from_labels(vec![0, 1]).unwrap();
        for s in 0..2u8 {
            let mut stream = RandomStream::new(key(11), format!("oracle-{i}-{s}").into_bytes());
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let r = stream.next_r().unwrap();
                let tok = permuted_cdf_sample(&dist, &pmap, s, r).unwrap();
                let x = statistic_term(pmap.label(tok).unwrap(), r, &SamplingFunction::default());
                sum += x;
                sq += x * x;
            }
            let mean = sum / n as f64;
            let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
            let want = if s == 0 {
                0.5 - p * (1.0 - p)
            } else {
                0.5 + p * (1.0 - p)
            };
            let z = (mean - want) / se;
            ok &= z.abs() <= 3.0;
            lines.push(format!("p={p} s={s} z={z:+.2}"));
        }
    }
    outcome(ok, lines.join(", "))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let model = StaticModel::new(Distribution::new(vec![0.5, 0.5]).unwrap());
    let pmap = PartitionMap::from_labels(vec![0, 1]).unwrap();
    let state = AgentState::new(vec![Turn::new(Role::User, vec![TokenId(0)]).unwrap()]);
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [4u32, 8] {
        // One margin term p(1 - p) = 0.25 at every step, so the floor is exact.
        let t = t_min(k, 0.25).unwrap();
        let sec = SecurityParams::new(k, 0.25, Some(t), FramingMode::Block).unwrap();
        let base = StegoConfig::new(key(3), sec, Vec::new());
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let trials = 10_000;
        let mut errors = 0;
        for i in 0..trials {
            let cfg = base.with_session(format!("bound-{k}-{i}").into_bytes());
            let bit = rng.random_range(0..2u8);
            let trace = encode_message(
                &model,
                &state,
                &[bit],
                &cfg,
                &pmap,
                &mut cfg.stream(),
                &EncodeOptions::default(),
            )
            .unwrap();
            let out = decode_message(
                &trace.tokens,
                &trace.block_boundaries,
                &cfg,
                &pmap,
                &mut cfg.stream(),
            )
            .unwrap();
            errors += (out.bits[0] != bit) as usize;
        }
        let ber = errors as f64 / trials as f64;
        let bound = (-(k as f64)).exp2();
        ok &= ber <= bound;
        parts.push(format!("k={k} T={t} BER={ber} bound={bound}"));
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(60);
    outcome(ok, format!("{}, {t:.2?}", parts.join(", ")))
}

fn suite(text: &str) -> Suite {
    Suite::parse_any(text).unwrap()
}

fn scenario(s: &Suite, name: &str) -> Scenario {
    s.scenarios
        .iter()
        .find(|sc| sc.name == name)
        .unwrap_or_else(|| panic!("no scenario {name}"))
        .clone()
}

fn row(sc: &Scenario) -> ReportRow {
    ReportRow::from_run(&run_scenario(sc).unwrap()).unwrap()
}

fn criterion_4() -> Outcome {
    let t1 = suite(TABLE1);
    let acf = row(&Scenario {
        trials: 20,
        ..scenario(&t1, "acf-k16-static")
    });
    let base = row(&scenario(&t1, "baseline-static"));
    outcome(
        acf.ber_mean == Some(0.0) && base.ber_mean == Some(0.0),
        format!(
            "ACF k=16 BER {:?} over {} bits, baseline BER {:?} over {} bits",
            acf.ber_mean, acf.total_bits, base.ber_mean, base.total_bits
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut sweep = suite(FIG2).sweep.unwrap();
    sweep.deltas = vec![0, 4];
    let (rows, _) = sweep_progressive_asymmetry(&sweep).unwrap();
    let get = |n: &str| rows.iter().find(|r| r.scenario == n).unwrap();
    let (a0, b0, a4, b4) = (
        get("acf-d0"),
        get("baseline-d0"),
        get("acf-d4"),
        get("baseline-d4"),
    );
    let b4_ber = b4.ber_mean.unwrap();
    let t = start.elapsed();
    let ok = a0.ber_mean == Some(0.0)
        && b0.ber_mean == Some(0.0)
        && a4.ber_mean == Some(0.0)
        && (0.35..=0.65).contains(&b4_ber)
        && rows.iter().all(|r| r.total_bits >= 1000)
        && t < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "Δ=0: ACF {:?} baseline {:?}; Δ=4: ACF {:?} (k={}, T={:?}) baseline {b4_ber:.4}; {} bits per arm, {t:.1?}",
            a0.ber_mean, b0.ber_mean, a4.ber_mean, a4.k, a4.block_len, a4.total_bits
        ),
    )
}

fn criterion_6() -> Outcome {
    let t1 = suite(TABLE1);
    let base = row(&scenario(&t1, "baseline-ret"));
    let acf: Vec<ReportRow> = ["acf-k8-ret", "acf-k12-ret", "acf-k16-ret"]
        .iter()
        .map(|n| row(&scenario(&t1, n)))
        .collect();
    let eics: Vec<f64> = acf.iter().map(|r| r.eic.unwrap()).collect();
    let b_ber = base.ber_mean.unwrap();
    let b_eic = base.eic.unwrap();
    let ok = (0.40..=0.60).contains(&b_ber)
        && b_eic < 0.05
        && acf[1].ber_mean == Some(0.0)
        && eics[1] > 0.5
        && eics[0] > eics[1]
        && eics[1] > eics[2];
    outcome(
        ok,
        format!(
            "baseline BER {b_ber:.4} EIC {b_eic:.5} over {} bits; ACF k=12 BER {:?} EIC {:.4}; EIC k=8/12/16 {:.4} > {:.4} > {:.4}",
            base.total_bits, acf[1].ber_mean, eics[1], eics[0], eics[1], eics[2]
        ),
    )
}

fn criterion_7() -> Outcome {
    let a = eic(10, 1000, 0.5).unwrap();
    let b = eic(100, 100_000, 0.0).unwrap();
    let c = eic(100, 100_000, 0.1).unwrap();
    outcome(
        a == 0.0 && b == 1.0 && (c - 0.5310).abs() <= 1e-4,
        format!("{a}, {b}, {c:.6}"),
    )
}

fn criterion_8() -> Outcome {
    let study = suite(TABLE1).indist.unwrap();
    let rows = run_indist(&study).unwrap();
    let rate = |n: &str| {
        rows.iter()
            .find(|r| r.name == n)
            .unwrap()
            .summary
            .rejection_rate
    };
    let (cc, cs, ct) = (
        rate("cover-vs-cover"),
        rate("cover-vs-stego"),
        rate("cover-vs-tempered"),
    );
    let near = |x: f64| (x - 0.05).abs() <= 0.02;
    outcome(
        near(cc) && near(cs) && ct > 0.5,
        format!("rejection at α=0.05: cover/cover {cc}, cover/stego {cs}, cover/tempered {ct}"),
    )
}

fn clopper_pearson(x: usize, n: usize, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let lo = if x == 0 {
        0.0
    } else {
        Beta::new(x as f64, (n - x + 1) as f64)
            .unwrap()
            .inverse_cdf(a)
    };
    let hi = if x == n {
        1.0
    } else {
        Beta::new((x + 1) as f64, (n - x) as f64)
            .unwrap()
            .inverse_cdf(1.0 - a)
    };
    (lo, hi)
}

fn criterion_9() -> Outcome {
    let sc = Scenario {
        name: "agnostic".into(),
        k: 4,
        trials: 1,
        bits_per_trial: 8,
        model: acf_core::harness::ModelSpec::Hash {
            seed: "agnostic".into(),
            vocab_size: 64,
            window: 8,
            mixing: 0.5,
            concentration: 20.0,
        },
        ..Default::default()
    };
    let setup = Setup::new(&sc).unwrap();
    let cfg = &setup.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let enc_state = AgentState::random(&mut rng, 64, 5, 2);

    // Decoder-state invariance.
    let bits: Vec<u8> = (0..8).map(|_| rng.random_range(0..2u8)).collect();
    let sid = session_id(0);
    let c = cfg.with_session(sid.clone());
    let trace = encode_message(
        setup.model.as_ref(),
        &enc_state,
        &bits,
        &c,
        &setup.pmap,
        &mut c.stream(),
        &EncodeOptions::default(),
    )
    .unwrap();
    let reference = receive(
        Method::Acf,
        &setup,
        &enc_state,
        &sid,
        &trace.tokens,
        &trace.block_boundaries,
    )
    .unwrap();
    let mut identical = true;
    for i in 0..10 {
        let mut other = AgentState::random(&mut rng, 64, 1 + i % 5, 1 + i);
        if i % 2 == 1 {
            other = other
                .append_private_summary(
                    Turn::new(Role::System, vec![TokenId(i as u32); 12]).unwrap(),
                )
                .unwrap();
        }
        let got = receive(
            Method::Acf,
            &setup,
            &other,
            &sid,
            &trace.tokens,
            &trace.block_boundaries,
        )
        .unwrap();
        identical &= got == reference;
    }
    let Received::Acf(ref_out) = &reference else {
        unreachable!()
    };
    let aligned = ref_out.bits == bits;

    // Misaligned session over 1000 single-bit trials.
    let n = 1000;
    let mut errors = 0;
    for i in 0..n {
        let bit = rng.random_range(0..2u8);
        let c = cfg.with_session(format!("sent-{i}").into_bytes());
        let trace = encode_message(
            setup.model.as_ref(),
            &enc_state,
            &[bit],
            &c,
            &setup.pmap,
            &mut c.stream(),
            &EncodeOptions::default(),
        )
        .unwrap();
        let wrong = format!("sent-{i}-x").into_bytes();
        let Received::Acf(out) = receive(
            Method::Acf,
            &setup,
            &enc_state,
            &wrong,
            &trace.tokens,
            &trace.block_boundaries,
        )
        .unwrap() else {
            unreachable!()
        };
        errors += (out.bits[0] != bit) as usize;
    }
    let (lo, hi) = clopper_pearson(errors, n, 0.99);
    outcome(
        identical && aligned && lo <= 0.5 && 0.5 <= hi,
        format!(
            "10 substitute states identical: {identical}; aligned decode exact: {aligned}; misaligned BER {:.3} (99% CI [{lo:.3}, {hi:.3}])",
            errors as f64 / n as f64
        ),
    )
}

const MIXED: &str = r#"
name = "determinism"

[[scenario]]
name = "normal"
method = "normal"
trials = 6
cover_tokens = 64
[scenario.model]
kind = "hash"
seed = "det"
vocab_size = 64
window = 8
mixing = 0.5
concentration = 20.0

[[scenario]]
name = "acf-ret"
method = "acf"
k = 6
trials = 6
bits_per_trial = 4
encoder_ops = [{ op = "retrieve", n_chunks = 2 }, { op = "summary", len = 5 }]
[scenario.model]
kind = "hash"
seed = "det"
vocab_size = 64
window = 8
mixing = 0.5
concentration = 20.0

[[scenario]]
name = "baseline-ret"
method = "baseline"
trials = 6
bits_per_trial = 16
encoder_ops = [{ op = "retrieve", n_chunks = 2 }]
[scenario.model]
kind = "hash"
seed = "det"
vocab_size = 64
window = 8
mixing = 0.5
concentration = 20.0

[sweep]
deltas = [0, 1, 3]
[sweep.base]
k = 6
trials = 4
bits_per_trial = 4
[sweep.base.model]
kind = "hash"
seed = "det"
vocab_size = 64
window = 8
mixing = 0.0
concentration = 20.0

[indist]
runs = 120
run_len = 16
temperature = 0.7
[indist.model]
kind = "zipf-ngram"
seed = 1
vocab_size = 64
corpus_len = 5000
exponent = 1.0
order = 1
alpha = 0.5
[indist.options]
split_size = 100
replicates = 20
alpha = 0.05
seed = 2
"#;

fn report_bytes(r: &ExperimentReport) -> Vec<String> {
    vec![
        r.rows_csv(),
        r.curve_csv().unwrap_or_default(),
        r.indist_csv().unwrap_or_default(),
        r.to_json().unwrap(),
    ]
}

fn criterion_10() -> Outcome {
    let s = suite(MIXED);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| report_bytes(&s.run().unwrap()))
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    let same = a == b && b == c;
    let differs = report_bytes(&s.clone().with_seed(99).run().unwrap()) != a;
    outcome(
        same && differs,
        format!("identical across 3 runs (1 and 4 threads): {same}; other seed differs: {differs}"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("zero-distortion exactness", criterion_1),
        ("statistic oracle", criterion_2),
        ("error bound", criterion_3),
        ("symmetric exactness", criterion_4),
        ("collapse vs robustness", criterion_5),
        ("+RET regime", criterion_6),
        ("EIC formula", criterion_7),
        ("indistinguishability proxy", criterion_8),
        ("prefix-agnostic decode", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|x| *x == id || name.contains(x.as_str())) {
            continue;
        }
        let o = f();
        println!(
            "criterion {id:>2} {name}: {} | {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.passed as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
