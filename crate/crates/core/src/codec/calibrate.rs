use crate::config::StegoConfig;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::partition::PartitionMap;
use crate::state::AgentState;
use crate::vocab::TokenId;

const MARGIN_FLOOR: f64 = 0.01;
const CALIBRATION_SESSION: &[u8] = b"margin-calibration";

/// `max(0.01, mean(m) - std(m))` with `m_t = p_t (1 - p_t)`, where `p_t` is
/// the mass of `V^(0)` at each step.
pub fn margin_from_masses(masses: &[f64]) -> Result<f64> {
    if masses.is_empty() {
        return Err(Error::Calibration("no calibration steps".into()));
    }
    let m: Vec<f64> = masses.iter().map(|p| p * (1.0 - p)).collect();
    if m.iter().all(|&x| x <= 0.0) {
        return Err(Error::Calibration(
            "every step puts all mass on one partition cell; the channel carries no signal".into(),
        ));
    }
    let n = m.len() as f64;
    let mean = m.iter().sum::<f64>() / n;
    let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok((mean - var.sqrt()).max(MARGIN_FLOOR))
}

/// Estimates the per-token margin `δ̄` by natural (unmodified) generation
/// from each sample state in turn, `n_steps` steps in total.
pub fn calibrate_margin(
    model: &dyn GenerativeModel,
    sample_states: &[AgentState],
    cfg: &StegoConfig,
    pmap: &PartitionMap,
    n_steps: usize,
) -> Result<f64> {
    if n_steps < 100 {
        return Err(Error::Calibration(format!(
            "need at least 100 calibration steps, got {n_steps}"
        )));
    }
    if sample_states.is_empty() {
        return Err(Error::Calibration("no sample states".into()));
    }
    if pmap.vocab_size() != model.vocab().size() {
        return Err(Error::domain(
            "partition does not cover the model vocabulary",
        ));
    }
    let mut stream = cfg.with_session(CALIBRATION_SESSION.to_vec()).stream();
    let per_state = n_steps.div_ceil(sample_states.len());
    let mut masses = Vec::with_capacity(n_steps);
    'outer: for state in sample_states {
        let mut ctx = model.context(&state.prefix())?;
        for _ in 0..per_state {
            if masses.len() == n_steps {
                break 'outer;
            }
            let dist = ctx.distribution()?;
            masses.push(pmap.mass(dist.probs(), 0));
            ctx.push(TokenId(dist.inverse_cdf(stream.next_r()?) as u32))?;
        }
    }
    margin_from_masses(&masses)
}
