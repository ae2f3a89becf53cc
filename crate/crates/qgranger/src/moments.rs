//! Ergodic estimates of lagged auto and cross covariances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gausslink::{
    midtread_cross_cov, midtread_variance, quantized_cross_cov, quantized_mean_variance, GaussPair,
};
use crate::quantize::QuantizerSpec;
use crate::signals::{SeriesPair, TrueMoments};

/// Lagged covariances keyed by integer lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedMoments {
    /// `Cov(x_t, z_{t+k})`.
    pub gamma_xz: BTreeMap<i64, f64>,
    /// `Cov(z_t, z_{t+k})`, `k >= 0`.
    pub gamma_zz: BTreeMap<i64, f64>,
    pub var_z: f64,
    /// Number of samples behind the estimates; 0 for exact moments.
    pub sample_count: usize,
    pub mean_x: f64,
    pub mean_z: f64,
}

impl LaggedMoments {
    pub fn xz(&self, k: i64) -> Option<f64> {
        self.gamma_xz.get(&k).copied()
    }

    pub fn zz(&self, k: i64) -> Option<f64> {
        self.gamma_zz.get(&k.abs()).copied()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_lag(lag: i64, n: usize) -> Result<()> {
    if lag.unsigned_abs() as usize > n / 4 {
        return Err(Error::LagTooLarge { lag, limit: n / 4 });
    }
    Ok(())
}

/// `(1/n) sum_{k} a_k b_{k+lag}` over the overlap, minus `mean(a) mean(b)`
/// when `zero_mean` is false. Negative lags swap the roles of `a` and `b`.
pub fn estimate_cross_cov(a: &[f64], b: &[f64], lags: &[i64], zero_mean: bool) -> Result<BTreeMap<i64, f64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!("series lengths differ: {} vs {}", n, b.len())));
    }
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {n}")));
    }
    for &lag in lags {
        check_lag(lag, n)?;
    }
    let correction = if zero_mean { 0.0 } else { mean(a) * mean(b) };
    let mut out = BTreeMap::new();
    for &lag in lags {
        let (lead, lagged) = if lag >= 0 { (a, b) } else { (b, a) };
        let s = lag.unsigned_abs() as usize;
        let sum: f64 = lead[..n - s].iter().zip(&lagged[s..]).map(|(u, v)| u * v).sum();
        out.insert(lag, sum / n as f64 - correction);
    }
    Ok(out)
}

/// Lags needed by a depth-`q` causality matrix of order `m`:
/// cross covariances on `[1-m, m]` and autocovariances on `[0, q]`.
pub fn estimate_moments(pair: &SeriesPair, m: usize, q: usize, zero_mean: bool) -> Result<LaggedMoments> {
    if m < 1 || q < m {
        return Err(Error::InvalidArgument(format!("need q >= m >= 1, got m = {m}, q = {q}")));
    }
    let n = pair.x.len();
    if pair.z.len() != n {
        return Err(Error::InvalidArgument(format!("series lengths differ: {} vs {}", n, pair.z.len())));
    }
    check_lag(q as i64, n)?;
    let mi = m as i64;
    let xz_lags: Vec<i64> = (1 - mi..=mi).collect();
    let zz_lags: Vec<i64> = (0..=q as i64).collect();
    let gamma_xz = estimate_cross_cov(&pair.x, &pair.z, &xz_lags, zero_mean)?;
    let gamma_zz = estimate_cross_cov(&pair.z, &pair.z, &zz_lags, zero_mean)?;
    let (mean_x, mean_z) = if zero_mean { (0.0, 0.0) } else { (mean(&pair.x), mean(&pair.z)) };
    Ok(LaggedMoments {
        var_z: gamma_zz[&0].max(0.0),
        gamma_xz,
        gamma_zz,
        sample_count: n,
        mean_x,
        mean_z,
    })
}

/// The lagged moments that quantized data would have in the limit of
/// infinitely many samples, computed from the exact Gaussian moments.
///
/// Both quantizers must be finite (binary or non-uniform) or both infinite
/// mid-tread.
pub fn quantized_true_moments(
    truth: &TrueMoments,
    spec_x: &QuantizerSpec,
    spec_z: &QuantizerSpec,
    m: usize,
    q: usize,
) -> Result<LaggedMoments> {
    if m < 1 || q < m {
        return Err(Error::InvalidArgument(format!("need q >= m >= 1, got m = {m}, q = {q}")));
    }
    if q > truth.max_lag {
        return Err(Error::MissingLag(q as i64));
    }
    let (sx, sz) = (truth.sigma_x(), truth.sigma_z());
    let rho_xz = |k: i64| truth.rho_xz(k).ok_or(Error::MissingLag(k));
    let rho_zz = |k: i64| truth.rho_zz(k).ok_or(Error::MissingLag(k));
    let mi = m as i64;
    let mut gamma_xz = BTreeMap::new();
    let mut gamma_zz = BTreeMap::new();
    let (mean_x, mean_z);
    match (spec_x, spec_z) {
        (QuantizerSpec::Uniform { delta: dx }, QuantizerSpec::Uniform { delta: dz }) => {
            for k in 1 - mi..=mi {
                gamma_xz.insert(k, midtread_cross_cov(GaussPair::new(rho_xz(k)?, sx, sz)?, *dx, *dz));
            }
            gamma_zz.insert(0, midtread_variance(sz, *dz));
            for k in 1..=q as i64 {
                gamma_zz.insert(k, midtread_cross_cov(GaussPair::new(rho_zz(k)?, sz, sz)?, *dz, *dz));
            }
            (mean_x, mean_z) = (0.0, 0.0);
        }
        (QuantizerSpec::Uniform { .. }, _) | (_, QuantizerSpec::Uniform { .. }) => {
            return Err(Error::InvalidArgument("mixing mid-tread and finite quantizers is not supported".into()));
        }
        _ => {
            for k in 1 - mi..=mi {
                gamma_xz.insert(k, quantized_cross_cov(GaussPair::new(rho_xz(k)?, sx, sz)?, spec_x, spec_z)?);
            }
            let (mz, vz) = quantized_mean_variance(sz, spec_z)?;
            gamma_zz.insert(0, vz);
            for k in 1..=q as i64 {
                gamma_zz.insert(k, quantized_cross_cov(GaussPair::new(rho_zz(k)?, sz, sz)?, spec_z, spec_z)?);
            }
            (mean_x, mean_z) = (quantized_mean_variance(sx, spec_x)?.0, mz);
        }
    }
    Ok(LaggedMoments { var_z: gamma_zz[&0], gamma_xz, gamma_zz, sample_count: 0, mean_x, mean_z })
}
