use crate::error::{Error, Result};

/// Tolerance on `Σ p = 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Probability vector over a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("distribution is empty"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain(
                "distribution has a negative or non-finite entry",
            ));
        }
        let sum = neumaier_sum(probs.iter().copied());
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::domain(format!("distribution sums to {sum}")));
        }
        Ok(Distribution { probs })
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total = neumaier_sum(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::domain("weights must have a positive finite total"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Softmax of `logits`, shifted by the maximum for stability.
    pub fn softmax(logits: &[f64]) -> Result<Self> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::from_weights(logits.iter().map(|l| (l - max).exp()).collect())
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::domain("distribution is empty"));
        }
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    /// Total-variation distance to another distribution of equal length.
    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Plain inverse-CDF sample over ascending token order: first index
    /// with `r < c_i`. Falls back to the last positive-mass token when
    /// rounding leaves `r` above the final cumulative sum.
    pub fn inverse_cdf(&self, r: f64) -> usize {
        let mut acc = Neumaier::default();
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
                acc.add(p);
                if r < acc.value() {
                    return i;
                }
            }
        }
        last_positive
    }
}

/// Neumaier (improved Kahan) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Distribution::new(vec![]).is_err());
    }

    #[test]
    fn entropy_edges() {
        assert_eq!(
            Distribution::new(vec![1.0, 0.0]).unwrap().entropy_bits(),
            0.0
        );
        assert!((Distribution::uniform(2).unwrap().entropy_bits() - 1.0).abs() < 1e-15);
        assert!((Distribution::uniform(256).unwrap().entropy_bits() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_intervals() {
        let d = Distribution::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(d.inverse_cdf(0.0), 0);
        assert_eq!(d.inverse_cdf(0.5), 0);
        assert_eq!(d.inverse_cdf(0.6), 1);
        assert_eq!(d.inverse_cdf(0.999_999), 1);
        let z = Distribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(z.inverse_cdf(0.0), 1);
        assert_eq!(z.inverse_cdf(0.99), 1);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        assert!((neumaier_sum(xs) - (1.0 + 1e-12)).abs() < 1e-20);
    }
}
