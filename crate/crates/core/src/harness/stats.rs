//! Small statistics helpers for experiment reports.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least squares fit `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided 95% confidence interval of the slope (NaN with < 3 points).
    pub slope_ci: (f64, f64),
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len().min(y.len());
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y[..n].iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_ci = if n >= 3 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Regression {
        slope,
        intercept,
        r_squared,
        slope_ci,
        points: n,
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Kolmogorov–Smirnov statistic `sup |F_n − F|` of a sample against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Critical value of the one-sample KS test at level 1% (Stephens' approximation).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let r = (n as f64).sqrt();
    1.628 / (r + 0.12 + 0.11 / r)
}
