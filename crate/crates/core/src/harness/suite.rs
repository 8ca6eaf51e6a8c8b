//! Suites: several scenarios, an optional Δ sweep, an optional
//! indistinguishability study and the expectations checked against them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::indist::{frequency_indistinguishability, generate_runs, IndistOptions, Sampler};
use super::report::{Curve, CurvePoint, ExperimentReport, IndistRow, ReportRow};
use super::run::run_scenario;
use super::scenario::{Method, ModelSpec, Scenario, StateOp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub deltas: Vec<usize>,
    #[serde(default = "default_arms")]
    pub arms: Vec<Method>,
    pub base: Scenario,
}

fn default_arms() -> Vec<Method> {
    vec![Method::Acf, Method::Baseline]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndistStudy {
    pub model: ModelSpec,
    pub runs: usize,
    pub run_len: usize,
    #[serde(default)]
    pub seed: u64,
    /// Temperature of the biased positive-control sampler.
    pub temperature: f64,
    #[serde(default)]
    pub options: IndistOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ber,
    Eic,
    EntropyMean,
    DesyncRate,
    RejectionRate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    /// `min <= metric(row) <= max`.
    Range {
        row: String,
        metric: Metric,
        min: f64,
        max: f64,
    },
    /// Strictly decreasing along `rows`.
    Decreasing { rows: Vec<String>, metric: Metric },
    /// `|metric(a) - metric(b)| <= tol`.
    Close {
        a: String,
        b: String,
        metric: Metric,
        tol: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: String,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub indist: Option<IndistStudy>,
    #[serde(default, rename = "expect")]
    pub expectations: Vec<Expectation>,
}

/// Scenario rows for every `(Δ, arm)`, named `{arm}-d{Δ}`, plus the curve.
/// Truncation is applied to the decoder only.
pub fn sweep_progressive_asymmetry(sweep: &Sweep) -> Result<(Vec<ReportRow>, Curve)> {
    let mut rows = Vec::new();
    let mut curve = Curve {
        arms: sweep.arms.iter().map(|m| m.as_str().to_string()).collect(),
        points: Vec::new(),
    };
    for &delta in &sweep.deltas {
        let mut ber = Vec::with_capacity(sweep.arms.len());
        for &arm in &sweep.arms {
            let mut sc = sweep.base.clone();
            sc.name = format!("{}-d{delta}", arm.as_str());
            sc.method = arm;
            if delta > 0 {
                sc.decoder_ops.push(StateOp::Truncate { delta });
            }
            let row = ReportRow::from_run(&run_scenario(&sc)?)?;
            ber.push(
                row.ber_mean
                    .ok_or_else(|| Error::Config("sweep arms must transmit bits".into()))?,
            );
            rows.push(row);
        }
        curve.points.push(CurvePoint { delta, ber });
    }
    Ok((rows, curve))
}

/// Three comparisons against a cover pool: an independent cover pool (the
/// null), ACF stego, and the tempered sampler.
pub fn run_indist(study: &IndistStudy) -> Result<Vec<IndistRow>> {
    let model = study.model.build()?;
    let v = model.vocab().size();
    let pool = |sampler, seed, label| {
        generate_runs(
            model.as_ref(),
            sampler,
            study.runs,
            study.run_len,
            seed,
            label,
        )
    };
    let cover = pool(Sampler::Cover, study.seed, "cover-a")?;
    let others = [
        (
            "cover-vs-cover",
            pool(Sampler::Cover, study.seed.wrapping_add(1), "cover-b")?,
        ),
        (
            "cover-vs-stego",
            pool(Sampler::Stego, study.seed.wrapping_add(2), "stego")?,
        ),
        (
            "cover-vs-tempered",
            pool(
                Sampler::Tempered(study.temperature),
                study.seed.wrapping_add(3),
                "tempered",
            )?,
        ),
    ];
    others
        .iter()
        .map(|(name, runs)| {
            Ok(IndistRow {
                name: name.to_string(),
                summary: frequency_indistinguishability(&cover, runs, v, &study.options)?,
            })
        })
        .collect()
}

impl Suite {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("suite: {e}")))
    }

    /// A suite document, or a single scenario document wrapped in a suite.
    pub fn parse_any(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if ["scenario", "sweep", "indist", "expect"]
            .iter()
            .any(|k| table.contains_key(*k))
        {
            Self::parse(text)
        } else {
            let sc = Scenario::parse(text)?;
            Ok(Suite {
                name: sc.name.clone(),
                scenarios: vec![sc],
                ..Default::default()
            })
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_any(&std::fs::read_to_string(path)?)
    }

    /// Replaces every seed in the suite.
    pub fn with_seed(mut self, seed: u64) -> Self {
        for sc in &mut self.scenarios {
            sc.seed = seed;
        }
        if let Some(sw) = &mut self.sweep {
            sw.base.seed = seed;
        }
        if let Some(st) = &mut self.indist {
            st.seed = seed;
            st.options.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        for sc in &self.scenarios {
            sc.validate()?;
        }
        if let Some(sw) = &self.sweep {
            if sw.deltas.is_empty() || sw.arms.is_empty() {
                return Err(Error::Config("sweep needs deltas and arms".into()));
            }
            for &d in &sw.deltas {
                let mut sc = sw.base.clone();
                sc.decoder_ops.push(StateOp::Truncate { delta: d });
                sc.validate()?;
            }
        }
        Ok(())
    }

    /// Runs everything. Configuration errors surface before any trial runs.
    pub fn run(&self) -> Result<ExperimentReport> {
        self.validate()?;
        let mut report = ExperimentReport {
            name: self.name.clone(),
            ..Default::default()
        };
        for sc in &self.scenarios {
            report.rows.push(ReportRow::from_run(&run_scenario(sc)?)?);
        }
        if let Some(sw) = &self.sweep {
            let (rows, curve) = sweep_progressive_asymmetry(sw)?;
            report.rows.extend(rows);
            report.curve = Some(curve);
        }
        if let Some(st) = &self.indist {
            report.indist = run_indist(st)?;
        }
        Ok(report)
    }

    pub fn check(&self, report: &ExperimentReport) -> Vec<CheckOutcome> {
        self.expectations
            .iter()
            .map(|e| e.evaluate(report))
            .collect()
    }
}

fn metric_value(report: &ExperimentReport, row: &str, metric: Metric) -> Option<f64> {
    if metric == Metric::RejectionRate {
        return report
            .indist
            .iter()
            .find(|r| r.name == row)
            .map(|r| r.summary.rejection_rate);
    }
    let r = report.row(row)?;
    match metric {
        Metric::Ber => r.ber_mean,
        Metric::Eic => r.eic,
        Metric::EntropyMean => Some(r.entropy_mean),
        Metric::DesyncRate => Some(r.desync_rate),
        Metric::RejectionRate => None,
    }
}

impl Expectation {
    pub fn evaluate(&self, report: &ExperimentReport) -> CheckOutcome {
        let get = |row: &str, m| metric_value(report, row, m);
        let missing = |description: String, row: &str| CheckOutcome {
            description,
            passed: false,
            detail: format!("no value for {row:?}"),
        };
        match self {
            Expectation::Range {
                row,
                metric,
                min,
                max,
            } => {
                let description = format!("{metric:?}({row}) in [{min}, {max}]");
                match get(row, *metric) {
                    Some(v) => CheckOutcome {
                        description,
                        passed: (*min..=*max).contains(&v),
                        detail: format!("{v}"),
                    },
                    None => missing(description, row),
                }
            }
            Expectation::Decreasing { rows, metric } => {
                let description = format!("{metric:?} decreasing over {}", rows.join(" > "));
                let mut values = Vec::new();
                for r in rows {
                    match get(r, *metric) {
                        Some(v) => values.push(v),
                        None => return missing(description, r),
                    }
                }
                let passed = values.windows(2).all(|w| w[0] > w[1]);
                CheckOutcome {
                    description,
                    passed,
                    detail: format!("{values:?}"),
                }
            }
            Expectation::Close { a, b, metric, tol } => {
                let description = format!("|{metric:?}({a}) - {metric:?}({b})| <= {tol}");
                match (get(a, *metric), get(b, *metric)) {
                    (Some(x), Some(y)) => CheckOutcome {
                        description,
                        passed: (x - y).abs() <= *tol,
                        detail: format!("{x} vs {y}"),
                    },
                    (None, _) => missing(description, a),
                    (_, None) => missing(description, b),
                }
            }
        }
    }
}
