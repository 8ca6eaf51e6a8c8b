//! Channel metrics: BER, binary entropy, effective information capacity.

use crate::error::{Error, Result};

/// Fraction of positions where `recovered` differs from `sent`.
pub fn ber(sent: &[u8], recovered: &[u8]) -> Result<f64> {
    if sent.len() != recovered.len() {
        return Err(Error::domain(format!(
            "{} sent bits vs {} recovered",
            sent.len(),
            recovered.len()
        )));
    }
    if sent.is_empty() {
        return Err(Error::domain("BER of an empty bit sequence"));
    }
    Ok(hamming(sent, recovered) as f64 / sent.len() as f64)
}

pub(crate) fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// `H2(p)` in bits, with `H2(0) = H2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Effective information capacity in bits per 10³ tokens:
/// `(bits / tokens · 10³) · (1 − H2(ber))`.
///
/// ```
/// use acf_core::harness::eic;
/// assert_eq!(eic(100, 100_000, 0.0).unwrap(), 1.0);
/// assert_eq!(eic(100, 100_000, 0.5).unwrap(), 0.0);
/// ```
pub fn eic(total_bits: usize, total_tokens: usize, ber: f64) -> Result<f64> {
    if total_tokens == 0 {
        return Err(Error::domain("EIC needs at least one token"));
    }
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::domain(format!("BER {ber} outside [0, 1]")));
    }
    Ok(total_bits as f64 / total_tokens as f64 * 1e3 * (1.0 - binary_entropy(ber)))
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
