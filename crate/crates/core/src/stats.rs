//! Chi-squared tail probabilities and Monte Carlo summaries.

use crate::error::{GofError, Result};

const MAX_ITER: usize = 10_000;
const FPMIN: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by its continued fraction
/// (modified Lentz).
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Upper-tail probability of the chi-squared distribution with `df` degrees
/// of freedom.
pub fn chi2_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(GofError::InvalidInput(
            "chi-squared df must be positive".into(),
        ));
    }
    if !(x >= 0.0) {
        return Err(GofError::InvalidInput(format!(
            "chi-squared argument must be nonnegative, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_q(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Two-sided normal quantile used for the Monte Carlo intervals.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub reps: usize,
    pub mean: f64,
    /// Sample variance with divisor `N - 1`.
    pub variance: f64,
    pub alpha: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mean_ci: (f64, f64),
    pub rejection_ci: (f64, f64),
}

impl McSummary {
    pub fn rejection_half_width(&self) -> f64 {
        0.5 * (self.rejection_ci.1 - self.rejection_ci.0)
    }

    pub fn mean_half_width(&self) -> f64 {
        0.5 * (self.mean_ci.1 - self.mean_ci.0)
    }
}

/// Sample moments, rejection rate at level `alpha`, and Wald 95% intervals.
/// Accumulation runs in input order, so the result is a deterministic
/// function of the sequence.
pub fn mc_summary(statistics: &[f64], p_values: &[f64], alpha: f64) -> Result<McSummary> {
    let n = statistics.len();
    if p_values.len() != n {
        return Err(GofError::InvalidInput(format!(
            "{n} statistics but {} p-values",
            p_values.len()
        )));
    }
    if n < 2 {
        return Err(GofError::InvalidInput(format!(
            "need at least 2 realizations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = statistics.iter().sum::<f64>() / nf;
    let variance = statistics.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let rejections = p_values.iter().filter(|&&p| p < alpha).count();
    let rate = rejections as f64 / nf;
    let mean_hw = Z95 * variance.sqrt() / nf.sqrt();
    let rej_hw = Z95 * (rate * (1.0 - rate) / nf).sqrt();
    Ok(McSummary {
        reps: n,
        mean,
        variance,
        alpha,
        rejections,
        rejection_rate: rate,
        mean_ci: (mean - mean_hw, mean + mean_hw),
        rejection_ci: (rate - rej_hw, rate + rej_hw),
    })
}
