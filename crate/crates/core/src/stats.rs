//! Small statistics toolkit: estimates with errors, least squares, weighted
//! goodness of fit, bootstrap and curve utilities.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::random::stream;

/// A mean with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(x: &[f64]) -> Estimate {
        let n = x.len() as f64;
        if x.is_empty() {
            return Estimate { mean: f64::NAN, se: f64::NAN };
        }
        let mean = x.iter().sum::<f64>() / n;
        let se =
            if x.len() > 1 { (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { 0.0 };
        Estimate { mean, se }
    }

    /// From running sums Σx and Σx² over `n` samples.
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Estimate {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, se: (var / nf).sqrt() }
    }
}

/// Population standard deviation with the n−1 correction.
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    /// Covariance of (intercept, slope).
    pub covariance: [[f64; 2]; 2],
    pub residual_ss: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "linear fit needs ≥ 2 matched points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("linear fit with a single distinct x".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { rss / (n - 2.0) } else { 0.0 };
    let var_slope = s2 / sxx;
    let var_int = s2 * (1.0 / n + mx * mx / sxx);
    let cov = -mx * var_slope;
    Ok(LinearFit {
        intercept,
        slope,
        intercept_se: var_int.sqrt(),
        slope_se: var_slope.sqrt(),
        covariance: [[var_int, cov], [cov, var_slope]],
        residual_ss: rss,
    })
}

/// Least-squares slope through the origin with its standard error.
pub fn proportional_fit(x: &[f64], y: &[f64]) -> Result<Estimate> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidInput("proportional fit needs matched, non-empty data".into()));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("proportional fit with all x = 0".into()));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let dof = x.len().saturating_sub(1).max(1) as f64;
    Ok(Estimate { mean: slope, se: (rss / dof / sxx).sqrt() })
}

/// Weighted chi-square goodness of fit against a continuous reference law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Kish effective sample size (Σw)²/Σw².
    pub n_eff: f64,
    pub bins: usize,
}

/// Chi-square test of weighted values against the reference `cdf`, using
/// `bins` cells of equal reference probability and the Kish effective sample
/// size for the expected counts.
pub fn chi_square_gof<F: Fn(f64) -> f64>(values: &[f64], weights: &[f64], cdf: F, bins: usize) -> Result<GofResult> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::InvalidInput("goodness of fit needs matched, non-empty data".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidInput("goodness of fit needs ≥ 2 bins".into()));
    }
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    if !(sw > 0.0) {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    let n_eff = sw * sw / sw2;
    let mut cell = vec![0.0; bins];
    for (&v, &w) in values.iter().zip(weights) {
        let u = cdf(v).clamp(0.0, 1.0);
        let k = ((u * bins as f64) as usize).min(bins - 1);
        cell[k] += w / sw;
    }
    let expected = n_eff / bins as f64;
    let statistic: f64 = cell.iter().map(|c| (c * n_eff - expected).powi(2) / expected).sum();
    let dof = bins - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(GofResult { statistic, dof, p_value: 1.0 - chi.cdf(statistic), n_eff, bins })
}

/// Bootstrap standard error of `stat` over resamples of `n` items. Each
/// resample uses its own stream of `seed`, so the result does not depend on
/// the thread count.
pub fn bootstrap_se<F>(n: usize, resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if n == 0 || resamples < 2 {
        return f64::NAN;
    }
    let vals: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect();
    std_dev(&vals)
}

/// Trapezoidal integral of samples `y(x)`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Full width at half maximum of a peaked curve, by linear interpolation
/// of the half-maximum crossings around the peak. `None` if a side never
/// drops below half.
pub fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let (ip, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let half = ymin + 0.5 * (ymax - ymin);
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    let left = (1..=ip).rev().find(|&k| y[k - 1] <= half).map(|k| cross(k - 1, k))?;
    let right = (ip..y.len() - 1).find(|&k| y[k + 1] <= half).map(|k| cross(k, k + 1))?;
    Some(right - left)
}
