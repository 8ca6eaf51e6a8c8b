//! Experiment harness: scenarios, trial runner, metrics, reports, suites.

mod indist;
mod metrics;
mod report;
mod run;
mod scenario;
mod suite;

pub use indist::{
    chi_square_homogeneity, frequency_indistinguishability, generate_runs, IndistOptions,
    IndistSummary, Sampler,
};
pub use metrics::{ber, binary_entropy, eic};
pub use report::{
    mean_generation_entropy, Curve, CurvePoint, ExperimentReport, Format, IndistRow, ReportRow,
    ROW_COLUMNS,
};
pub use run::{
    apply_ops, receive, run_scenario, run_trial, session_id, Received, ScenarioRun, Setup,
    TrialRecord,
};
pub use scenario::{zipf_corpus, Method, ModelSpec, PoolSpec, Scenario, StateOp};
pub use suite::{
    run_indist, sweep_progressive_asymmetry, CheckOutcome, Expectation, IndistStudy, Metric, Suite,
    Sweep,
};
