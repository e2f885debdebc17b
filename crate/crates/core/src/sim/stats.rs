//! Batch-means estimation.

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, se: 0.0 }
    }

    /// `|mean - value| <= k * se`, with a rounding allowance so that
    /// zero-variance estimates of exact values still compare equal.
    pub fn within(&self, value: f64, k: f64) -> bool {
        let slack = 1e-12 * value.abs().max(1e-300);
        (self.mean - value).abs() <= k * self.se + slack
    }

    /// Distance to `value` in standard errors.
    pub fn z(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// Ratio estimator `sum(num) / sum(den)` over batches, with the usual
/// linearized standard error. Batches with a zero denominator still count
/// toward the spread.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    debug_assert_eq!(num.len(), den.len());
    let total_den: f64 = den.iter().sum();
    if total_den == 0.0 {
        return Estimate {
            mean: f64::NAN,
            se: f64::INFINITY,
        };
    }
    let r = num.iter().sum::<f64>() / total_den;
    let b = num.len();
    if b < 2 {
        return Estimate {
            mean: r,
            se: f64::INFINITY,
        };
    }
    let mean_den = total_den / b as f64;
    let ss: f64 = num
        .iter()
        .zip(den)
        .map(|(y, x)| {
            let e = y - r * x;
            e * e
        })
        .sum();
    Estimate {
        mean: r,
        se: (ss / (b * (b - 1)) as f64).sqrt() / mean_den,
    }
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: u64, trials: u64) -> Estimate {
    if trials == 0 {
        return Estimate {
            mean: f64::NAN,
            se: f64::INFINITY,
        };
    }
    let p = successes as f64 / trials as f64;
    Estimate {
        mean: p,
        se: (p * (1.0 - p) / trials as f64).sqrt(),
    }
}

/// Least-squares slope of `y` against its index with the slope's standard
/// error from the residuals.
pub fn slope(y: &[f64]) -> (f64, f64) {
    let n = y.len();
    if n < 3 {
        return (0.0, f64::INFINITY);
    }
    let nf = n as f64;
    let xm = (nf - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / nf;
    let sxx: f64 = (0..n).map(|i| (i as f64 - xm).powi(2)).sum();
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - xm) * (v - ym)).sum();
    let b = sxy / sxx;
    let sse: f64 = y
        .iter()
        .enumerate()
        .map(|(i, v)| (v - ym - b * (i as f64 - xm)).powi(2))
        .sum();
    (b, (sse / (nf - 2.0) / sxx).sqrt())
}
