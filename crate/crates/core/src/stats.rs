//! Kolmogorov–Smirnov tests and the chi distribution.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("sample contains NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample two-sided test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: p_value(d, n),
        n_eff: n,
    })
}

/// Two-sample two-sided test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
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
    let n_eff = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        p_value: p_value(d, n_eff),
        n_eff,
    })
}

/// CDF of the chi distribution with `dof` degrees of freedom.
pub fn chi_cdf(dof: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").cdf(r * r)
}

/// KS test of `|x| / sqrt(t)` over the sample points against chi(`dof`).
pub fn radial_compare(samples: &[Vec<f64>], t: f64, dof: usize) -> Result<KsResult> {
    if dof == 0 {
        return Err(Error::InvalidInput("dof must be positive".into()));
    }
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let radii = radii(samples, t);
    ks_one_sample(&radii, |r| chi_cdf(dof, r))
}

/// `|x| / sqrt(t)` for every sample point.
pub fn radii(samples: &[Vec<f64>], t: f64) -> Vec<f64> {
    let s = t.sqrt();
    samples
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() / s)
        .collect()
}
