//! Small numeric helpers shared by the closed forms.

/// Binomial coefficient as a float. Exact for the population sizes used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// `q^k (1-q)^(n-k)`, with `0^0 = 1`.
pub(crate) fn bernoulli_pattern(q: f64, n: usize, k: usize) -> f64 {
    q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)
}
