use crate::distribution::{Distribution, Neumaier};
use crate::error::{Error, Result};
use crate::partition::PartitionMap;
use crate::vocab::TokenId;

/// Token order used by the encoder: `V^(s)` ascending, then `V^(1-s)` ascending.
pub fn permuted_order(pmap: &PartitionMap, s: u8) -> impl Iterator<Item = usize> + '_ {
    let labels = pmap.labels();
    let lead = labels
        .iter()
        .enumerate()
        .filter(move |(_, &l)| l == s)
        .map(|(i, _)| i);
    let rest = labels
        .iter()
        .enumerate()
        .filter(move |(_, &l)| l != s)
        .map(|(i, _)| i);
    lead.chain(rest)
}

/// Inverse-CDF sample of `dist` under the permutation that puts `V^(s)` first.
///
/// ```
/// use acf_core::{permuted_cdf_sample, Distribution, PartitionMap, TokenId};
///
/// let dist = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
/// let pmap = PartitionMap::from_labels(vec![0, 1, 0]).unwrap();
/// // s = 0: order (a, c, b) with cumulative mass (0.5, 0.7, 1.0).
/// assert_eq!(permuted_cdf_sample(&dist, &pmap, 0, 0.6).unwrap(), TokenId(2));
/// // s = 1: order (b, a, c) with cumulative mass (0.3, 0.8, 1.0).
/// assert_eq!(permuted_cdf_sample(&dist, &pmap, 1, 0.6).unwrap(), TokenId(0));
/// ```
pub fn permuted_cdf_sample(
    dist: &Distribution,
    pmap: &PartitionMap,
    s: u8,
    r: f64,
) -> Result<TokenId> {
    if dist.len() != pmap.vocab_size() {
        return Err(Error::domain(format!(
            "distribution over {} tokens but partition covers {}",
            dist.len(),
            pmap.vocab_size()
        )));
    }
    if s > 1 {
        return Err(Error::domain("secret bit must be 0 or 1"));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("draw {r} outside [0, 1)")));
    }
    let probs = dist.probs();
    let mut acc = Neumaier::default();
    let mut last_positive = None;
    for i in permuted_order(pmap, s) {
        let p = probs[i];
        if p <= 0.0 {
            continue;
        }
        last_positive = Some(i);
        acc.add(p);
        if r < acc.value() {
            return Ok(TokenId(i as u32));
        }
    }
    // Only reachable when rounding leaves the total a hair below r.
    last_positive
        .map(|i| TokenId(i as u32))
        .ok_or_else(|| Error::domain("distribution has no positive mass"))
}
