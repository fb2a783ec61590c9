//! Kolmogorov-Smirnov tests and small sample summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest sample the KS tests accept.
pub const MIN_KS_SAMPLE: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample of {0} is below the minimum of {MIN_KS_SAMPLE}")]
    TooSmall(usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov survival function `Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2)`.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(en: f64, d: f64) -> f64 {
    let en = en.sqrt();
    kolmogorov_q((en + 0.12 + 0.11 / en) * d)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.len() < MIN_KS_SAMPLE {
        return Err(StatsError::TooSmall(sample.len()));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample test against the standard normal.
pub fn ks_standard_normal(sample: &[f64]) -> Result<KsResult, StatsError> {
    let s = sorted(sample)?;
    let n = s.len() as f64;
    let d = s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal_cdf(x);
        d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs())
    });
    Ok(KsResult { d, p: p_value(n, d) })
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { d, p: p_value(na * nb / (na + nb), d) })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
