//! Aggregation of trial records into report rows and their CSV/JSON forms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::indist::IndistSummary;
use super::metrics::{eic, hamming, mean_std};
use super::run::{ScenarioRun, TrialRecord};

/// One scenario × method row.
///
/// `ber_mean` is pooled over every sent bit of every trial; `ber_std` is the
/// spread of the per-trial BER. Entropy statistics are step-weighted over
/// all trials. `score` and `f1` are placeholders for semantic metrics this
/// crate does not compute and are always empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub method: String,
    pub k: u32,
    pub entropy_mean: f64,
    pub entropy_std: f64,
    pub ber_mean: Option<f64>,
    pub ber_std: Option<f64>,
    pub eic: Option<f64>,
    /// Decoder desync events per emitted token.
    pub desync_rate: f64,
    pub ber_trial_mean: Option<f64>,
    pub total_bits: usize,
    pub total_tokens: usize,
    pub block_len: Option<usize>,
    pub margin: Option<f64>,
    pub score: Option<f64>,
    pub f1: Option<f64>,
}

pub const ROW_COLUMNS: &[&str] = &[
    "scenario",
    "method",
    "k",
    "entropy_mean",
    "entropy_std",
    "ber_mean",
    "ber_std",
    "eic",
    "desync_rate",
    "ber_trial_mean",
    "total_bits",
    "total_tokens",
    "block_len",
    "margin",
    "score",
    "f1",
];

/// `(mean, std)` of per-step entropy, pooled over all steps of all trials.
pub fn mean_generation_entropy(records: &[TrialRecord]) -> (f64, f64) {
    mean_std(records.iter().flat_map(|r| r.step_entropy.iter().copied()))
}

impl ReportRow {
    pub fn from_run(run: &ScenarioRun) -> Result<Self> {
        let records = &run.records;
        let total_bits: usize = records.iter().map(|r| r.sent_bits.len()).sum();
        let total_tokens: usize = records.iter().map(|r| r.token_count).sum();
        let errors: usize = records
            .iter()
            .map(|r| hamming(&r.sent_bits, &r.recovered_bits))
            .sum();
        let desyncs: usize = records.iter().map(|r| r.desync_count).sum();
        let (entropy_mean, entropy_std) = mean_generation_entropy(records);
        let (ber_mean, ber_std, ber_trial_mean, eic_value) = if total_bits > 0 {
            let pooled = errors as f64 / total_bits as f64;
            let (tm, ts) = mean_std(records.iter().filter(|r| !r.sent_bits.is_empty()).map(|r| {
                hamming(&r.sent_bits, &r.recovered_bits) as f64 / r.sent_bits.len() as f64
            }));
            (
                Some(pooled),
                Some(ts),
                Some(tm),
                Some(eic(total_bits, total_tokens, pooled)?),
            )
        } else {
            (None, None, None, None)
        };
        Ok(ReportRow {
            scenario: run.scenario.name.clone(),
            method: run.scenario.method.as_str().to_string(),
            k: run.scenario.k,
            entropy_mean,
            entropy_std,
            ber_mean,
            ber_std,
            eic: eic_value,
            desync_rate: if total_tokens > 0 {
                desyncs as f64 / total_tokens as f64
            } else {
                0.0
            },
            ber_trial_mean,
            total_bits,
            total_tokens,
            block_len: run.block_len,
            margin: run.margin,
            score: None,
            f1: None,
        })
    }

    fn csv_fields(&self) -> Vec<String> {
        fn opt(v: Option<f64>) -> String {
            v.map(fmt_f64).unwrap_or_default()
        }
        vec![
            csv_escape(&self.scenario),
            csv_escape(&self.method),
            self.k.to_string(),
            fmt_f64(self.entropy_mean),
            fmt_f64(self.entropy_std),
            opt(self.ber_mean),
            opt(self.ber_std),
            opt(self.eic),
            fmt_f64(self.desync_rate),
            opt(self.ber_trial_mean),
            self.total_bits.to_string(),
            self.total_tokens.to_string(),
            self.block_len.map(|b| b.to_string()).unwrap_or_default(),
            opt(self.margin),
            opt(self.score),
            opt(self.f1),
        ]
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn fmt_f64(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-6..1e16).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// BER against Δ, one column per arm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub arms: Vec<String>,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: usize,
    /// One entry per arm, in `Curve::arms` order.
    pub ber: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistRow {
    pub name: String,
    #[serde(flatten)]
    pub summary: IndistSummary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indist: Vec<IndistRow>,
}

impl ExperimentReport {
    pub fn row(&self, scenario: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scenario == scenario)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = ROW_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_fields().join(","));
            out.push('\n');
        }
        out
    }

    pub fn curve_csv(&self) -> Option<String> {
        let curve = self.curve.as_ref()?;
        let mut out = String::from("delta");
        for arm in &curve.arms {
            out.push(',');
            out.push_str(&csv_escape(arm));
        }
        out.push('\n');
        for p in &curve.points {
            let _ = write!(out, "{}", p.delta);
            for b in &p.ber {
                let _ = write!(out, ",{}", fmt_f64(*b));
            }
            out.push('\n');
        }
        Some(out)
    }

    pub fn indist_csv(&self) -> Option<String> {
        if self.indist.is_empty() {
            return None;
        }
        let mut out = String::from("name,replicates,alpha,rejection_rate,median_p,pooled_p\n");
        for r in &self.indist {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_escape(&r.name),
                s.replicates,
                fmt_f64(s.alpha),
                fmt_f64(s.rejection_rate),
                fmt_f64(s.median_p),
                fmt_f64(s.pooled_p)
            );
        }
        Some(out)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Writes the report into directory `dir` and returns the files written.
    /// CSV produces `report.csv` plus `curve.csv` and `indist.csv` when those
    /// parts are present; JSON produces a single `report.json`.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: &str, body: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            files.push(p);
            Ok(())
        };
        match format {
            Format::Json => put("report.json", self.to_json()? + "\n")?,
            Format::Csv => {
                put("report.csv", self.rows_csv())?;
                if let Some(c) = self.curve_csv() {
                    put("curve.csv", c)?;
                }
                if let Some(c) = self.indist_csv() {
                    put("indist.csv", c)?;
                }
            }
        }
        Ok(files)
    }
}
