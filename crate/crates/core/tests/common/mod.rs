//! Black-box interval enumeration of samplers over `r ∈ [0, 1)`.

/// The first f64 in `(lo, 1)` at which `sample` stops returning `tok`, or 1.
pub fn next_breakpoint(sample: &dyn Fn(f64) -> usize, lo: f64, tok: usize) -> f64 {
    let top = 1.0f64.to_bits();
    if sample(f64::from_bits(top - 1)) == tok {
        return 1.0;
    }
    let (mut a, mut b) = (lo.to_bits(), top - 1);
    // Invariant: sample(a) == tok, sample(b) != tok.
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if sample(f64::from_bits(mid)) == tok {
            a = mid;
        } else {
            b = mid;
        }
    }
    f64::from_bits(b)
}

/// Output mass per token of a sampler over `r ∈ [0, 1)`, assuming each token
/// occupies one interval. `None` if a token shows up in two intervals.
pub fn interval_masses(sample: &dyn Fn(f64) -> usize, n: usize) -> Option<Vec<f64>> {
    let mut mass = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut r = 0.0;
    while r < 1.0 {
        let tok = sample(r);
        if std::mem::replace(&mut seen[tok], true) {
            return None;
        }
        let end = next_breakpoint(sample, r, tok);
        mass[tok] += end - r;
        r = end;
    }
    Some(mass)
}
