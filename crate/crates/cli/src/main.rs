use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acf_core::harness::{ExperimentReport, Format, Scenario, Suite, Sweep};
use acf_core::partition::derive_partition;
use acf_core::state::AgentState;
use acf_core::{
    calibrate_margin, decode_message, encode_message, ConfigFile, EncodeOptions, FramingMode,
    SecretKey, SecurityParams, StegoConfig, StegoRecord,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXIT_USAGE: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 2;
const EXIT_IO: u8 = 3;

const BUNDLED: &[(&str, &str)] = &[
    ("table2", include_str!("../../../scenarios/table2.toml")),
    ("fig2", include_str!("../../../scenarios/fig2.toml")),
    (
        "tableI-statistical",
        include_str!("../../../scenarios/tableI-statistical.toml"),
    ),
];

#[derive(Parser)]
#[command(
    name = "acf",
    version,
    about = "Prefix-independent covert channel between generative agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a config skeleton with a fresh random key.
    Keygen(KeygenArgs),
    /// Measure the margin floor of a model and store it in the config.
    Calibrate(CalibrateArgs),
    /// Embed bits into a stego-text record.
    Encode(EncodeArgs),
    /// Recover bits from a record using the config alone.
    Decode(DecodeArgs),
    /// Run every scenario of a suite and write the report.
    Simulate(RunArgs),
    /// Run the progressive-truncation sweep of a suite.
    Sweep(RunArgs),
    /// Re-emit a saved JSON report, optionally checking it against a suite.
    Report(ReportArgs),
    /// Run a suite and evaluate its expectations.
    Check(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Block,
    WholeSequence,
}

#[derive(Args)]
struct KeygenArgs {
    /// Where to write the config. Printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use this key instead of drawing one from system entropy.
    #[arg(long)]
    key_hex: Option<String>,
    #[arg(long, default_value_t = 12)]
    k: u32,
    #[arg(long, default_value = "session-0")]
    session: String,
    #[arg(long, value_enum, default_value = "block")]
    mode: ModeArg,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Model spec (TOML).
    #[arg(long)]
    model: PathBuf,
    /// Agent state (JSON). Random states drawn from --seed when absent.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Updated config destination; defaults to rewriting --config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Agent state (JSON). A random five-turn state from --seed when absent.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Secret bits as a string of 0s and 1s.
    #[arg(long, default_value = "")]
    bits: String,
    /// Overrides the config's session id.
    #[arg(long)]
    session: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Deliberately has no model or state option.
#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Stego-text record (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Bundled suite name (table2, fig2, tableI-statistical) or a path.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. The report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads for trial-level parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Evaluate the suite's expectations and exit 2 if any fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by simulate, sweep or check.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Suite whose expectations are evaluated against the report.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if let Some(acf_core::Error::Io(_)) = cause.downcast_ref::<acf_core::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => run_suite(a, false),
        Command::Sweep(a) => run_suite(a, true),
        Command::Check(a) => run_suite(RunArgs { check: true, ..a }, false),
        Command::Report(a) => report(a),
    }
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn keygen(a: KeygenArgs) -> Result<u8> {
    let sk = match a.key_hex {
        Some(h) => SecretKey::from_hex(&h)?,
        None => {
            let mut bytes = vec![0u8; 32];
            rand::rng().fill(&mut bytes[..]);
            SecretKey::new(bytes)?
        }
    };
    let mode = match a.mode {
        ModeArg::Block => FramingMode::Block,
        ModeArg::WholeSequence => FramingMode::WholeSequence,
    };
    let file = ConfigFile {
        key_hex: sk.to_hex(),
        session_id: a.session,
        k: a.k,
        margin_floor: None,
        block_len: None,
        mode,
        rule: Default::default(),
        f: Default::default(),
    };
    match a.out {
        Some(p) => {
            file.save(&p)
                .with_context(|| format!("writing {}", p.display()))?;
            println!("{}", file.key_hex);
        }
        None => print!("{}", file.to_toml()),
    }
    Ok(0)
}

fn load_model(path: &Path) -> Result<Box<dyn acf_core::model::GenerativeModel>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(acf_core::harness::ModelSpec::parse(&text)?.build()?)
}

fn load_states(
    state: Option<&Path>,
    n: usize,
    seed: u64,
    vocab_size: usize,
) -> Result<Vec<AgentState>> {
    match state {
        Some(p) => Ok(vec![
            AgentState::load(p).with_context(|| format!("loading {}", p.display()))?
        ]),
        None => {
            let defaults = Scenario::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n)
                .map(|_| {
                    AgentState::random(
                        &mut rng,
                        vocab_size,
                        defaults.initial_shared_turns,
                        defaults.turn_len,
                    )
                })
                .collect())
        }
    }
}

fn calibrate(a: CalibrateArgs) -> Result<u8> {
    let mut file =
        ConfigFile::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    let model = load_model(&a.model)?;
    let v = model.vocab().size();
    let probe = ConfigFile {
        margin_floor: Some(0.25),
        block_len: None,
        ..file.clone()
    }
    .into_config()?;
    let pmap = derive_partition(v, &probe)?;
    let states = load_states(a.state.as_deref(), 16, a.seed, v)?;
    let margin = calibrate_margin(model.as_ref(), &states, &probe, &pmap, a.steps)?;
    let sec = SecurityParams::new(file.k, margin, None, file.mode)?;
    file.margin_floor = Some(margin);
    file.block_len = None;
    file.save(a.out.as_deref().unwrap_or(&a.config))?;
    println!("margin_floor = {margin}\nblock_len = {}", sec.block_len);
    Ok(0)
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("bits must be 0 or 1, got {c:?}"),
        })
        .collect()
}

fn encode(a: EncodeArgs) -> Result<u8> {
    let mut cfg: StegoConfig = ConfigFile::load(&a.config)
        .with_context(|| format!("loading {}", a.config.display()))?
        .into_config()?;
    if let Some(s) = a.session {
        cfg.session_id = s.into_bytes();
    }
    let bits = parse_bits(&a.bits)?;
    let model = load_model(&a.model)?;
    let v = model.vocab().size();
    let pmap = derive_partition(v, &cfg)?;
    let state = load_states(a.state.as_deref(), 1, a.seed, v)?.remove(0);
    let trace = encode_message(
        model.as_ref(),
        &state,
        &bits,
        &cfg,
        &pmap,
        &mut cfg.stream(),
        &EncodeOptions::default(),
    )?;
    let record = StegoRecord::new(
        &cfg.session_id,
        trace.tokens,
        trace.block_boundaries,
        Some(model.vocab()),
    );
    write_or_print(a.out.as_deref(), &record.to_json())?;
    Ok(0)
}

/// Mean distance of Λ from the threshold in units of the expected shift
/// `T·δ̄`. Near 1 for an aligned stream, near 0 for a misaligned one.
fn alignment_score(stats: &[f64], thresholds: &[f64], margin: f64) -> f64 {
    let n = stats.len().max(1) as f64;
    stats
        .iter()
        .zip(thresholds)
        .map(|(l, tau)| (l - tau).abs() / (2.0 * tau * margin))
        .sum::<f64>()
        / n
}

fn decode(a: DecodeArgs) -> Result<u8> {
    let cfg = ConfigFile::load(&a.config)
        .with_context(|| format!("loading {}", a.config.display()))?
        .into_config()?;
    let record =
        StegoRecord::load(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    if record.method != acf_core::codec::METHOD_ACF {
        bail!(
            "record method {:?} cannot be decoded without a model",
            record.method
        );
    }
    let max = record
        .tokens
        .iter()
        .map(|t| t.index() + 1)
        .max()
        .unwrap_or(1);
    let cfg = cfg.with_session(record.session_id.clone().into_bytes());
    // Labels depend only on token ids, so any cover of the ids seen suffices.
    let pmap = derive_partition(max.max(2), &cfg)?;
    let out = decode_message(
        &record.tokens,
        &record.block_boundaries,
        &cfg,
        &pmap,
        &mut cfg.stream(),
    )?;
    let score = alignment_score(&out.statistics, &out.thresholds, cfg.sec.margin_floor);
    if !out.bits.is_empty() && score < 0.5 {
        eprintln!(
            "warning: statistics sit at the threshold (alignment {score:.3}); the key or session id likely \
             does not match and about half the bits will be wrong"
        );
    }
    let bits: String = out
        .bits
        .iter()
        .map(|b| if *b == 1 { '1' } else { '0' })
        .collect();
    let json = serde_json::json!({
        "bits": bits,
        "statistics": out.statistics,
        "thresholds": out.thresholds,
        "error_bound": out.error_bound,
    });
    write_or_print(
        a.out.as_deref(),
        &(serde_json::to_string_pretty(&json)? + "\n"),
    )?;
    Ok(0)
}

fn load_suite(name: &str) -> Result<Suite> {
    if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name) {
        return Ok(Suite::parse_any(text)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        bail!(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "no scenario file {name:?} and no bundled scenario of that name (bundled: {})",
                names.join(", ")
            )
        ));
    }
    Suite::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Keeps only the sweep; a suite without one sweeps its single scenario.
fn sweep_only(suite: Suite) -> Result<Suite> {
    let sweep = match suite.sweep {
        Some(s) => s,
        None => match suite.scenarios.as_slice() {
            [base] => Sweep {
                deltas: (0..=4).collect(),
                arms: vec![base.method],
                base: base.clone(),
            },
            _ => bail!("suite {:?} has no [sweep] section", suite.name),
        },
    };
    let expectations = suite.expectations;
    Ok(Suite {
        name: suite.name,
        scenarios: Vec::new(),
        sweep: Some(sweep),
        indist: None,
        expectations,
    })
}

fn emit(report: &ExperimentReport, out: Option<&Path>, format: Format) -> Result<()> {
    match out {
        Some(dir) => {
            for f in report
                .emit(dir, format)
                .with_context(|| format!("writing into {}", dir.display()))?
            {
                eprintln!("wrote {}", f.display());
            }
        }
        None => match format {
            Format::Json => println!("{}", report.to_json()?),
            Format::Csv => {
                print!("{}", report.rows_csv());
                if let Some(c) = report.curve_csv() {
                    print!("\n{c}");
                }
                if let Some(c) = report.indist_csv() {
                    print!("\n{c}");
                }
            }
        },
    }
    Ok(())
}

fn check_report(suite: &Suite, report: &ExperimentReport) -> u8 {
    let outcomes = suite.check(report);
    for o in &outcomes {
        eprintln!(
            "{} {} ({})",
            if o.passed { "PASS" } else { "FAIL" },
            o.description,
            o.detail
        );
    }
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        EXIT_ACCEPTANCE
    }
}

fn run_suite(a: RunArgs, sweep: bool) -> Result<u8> {
    if let Some(n) = a.jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let mut suite = load_suite(&a.scenario)?;
    if let Some(seed) = a.seed {
        suite = suite.with_seed(seed);
    }
    if sweep {
        suite = sweep_only(suite)?;
        // Expectations about rows the sweep does not produce are dropped.
        let names: Vec<String> = suite.sweep.iter().flat_map(sweep_rows).collect();
        suite
            .expectations
            .retain(|e| expectation_rows(e).iter().all(|r| names.contains(r)));
    }
    let report = suite.run()?;
    emit(&report, a.out.as_deref(), a.format.into())?;
    Ok(if a.check {
        check_report(&suite, &report)
    } else {
        0
    })
}

fn sweep_rows(s: &Sweep) -> Vec<String> {
    s.deltas
        .iter()
        .flat_map(|d| s.arms.iter().map(move |m| format!("{}-d{d}", m.as_str())))
        .collect()
}

fn expectation_rows(e: &acf_core::harness::Expectation) -> Vec<String> {
    use acf_core::harness::Expectation::*;
    match e {
        Range { row, .. } => vec![row.clone()],
        Decreasing { rows, .. } => rows.clone(),
        Close { a, b, .. } => vec![a.clone(), b.clone()],
    }
}

fn report(a: ReportArgs) -> Result<u8> {
    let report = ExperimentReport::load(&a.input)
        .with_context(|| format!("loading {}", a.input.display()))?;
    emit(&report, a.out.as_deref(), a.format.into())?;
    if a.check {
        let Some(name) = a.scenario else {
            bail!("--check needs --scenario")
        };
        return Ok(check_report(&load_suite(&name)?, &report));
    }
    Ok(0)
}
