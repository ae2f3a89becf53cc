use std::f64::consts::PI;

use rayon::prelude::*;

use super::PriorBounds;
use crate::error::{Error, Result};
use crate::gausslink::{quantized_cross_cov, quantized_variance, GaussPair};
use crate::quantize::QuantizerSpec;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Maximize `f` over a box: dense grid first, then a few sweeps of
/// coordinate-wise golden-section search around the best grid point.
/// The grid reduction is order-deterministic.
fn maximize_box<F>(lo: &[f64], hi: &[f64], density: usize, f: F) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let axes: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(&a, &b)| linspace(a, b, density)).collect();
    let total: usize = axes.iter().map(|a| a.len()).product();
    let point = |mut idx: usize| -> Vec<f64> {
        axes.iter()
            .map(|a| {
                let v = a[idx % a.len()];
                idx /= a.len();
                v
            })
            .collect()
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| f(&point(i)))
        .collect::<Result<Vec<_>>>()?;
    let (best_i, mut best) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut x = point(best_i);

    let steps: Vec<f64> = axes.iter().map(|a| if a.len() > 1 { a[1] - a[0] } else { 0.0 }).collect();
    for _sweep in 0..3 {
        let before = best;
        for d in 0..x.len() {
            if steps[d] == 0.0 {
                continue;
            }
            let mut a = (x[d] - steps[d]).max(lo[d]);
            let mut b = (x[d] + steps[d]).min(hi[d]);
            let eval = |t: f64, x: &mut Vec<f64>| -> Result<f64> {
                let keep = x[d];
                x[d] = t;
                let v = f(x);
                x[d] = keep;
                v
            };
            let mut c = b - GOLDEN * (b - a);
            let mut e = a + GOLDEN * (b - a);
            let mut fc = eval(c, &mut x)?;
            let mut fe = eval(e, &mut x)?;
            while b - a > 1e-9 * (1.0 + steps[d]) {
                if fc > fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - GOLDEN * (b - a);
                    fc = eval(c, &mut x)?;
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + GOLDEN * (b - a);
                    fe = eval(e, &mut x)?;
                }
            }
            let (t, v) = if fc > fe { (c, fc) } else { (e, fe) };
            if v > best {
                best = v;
                x[d] = t;
            }
        }
        if best - before <= 1e-8 {
            break;
        }
    }
    Ok((best, x))
}

fn rho_range(rho_max: f64, a: &QuantizerSpec, b: &QuantizerSpec) -> (f64, f64) {
    // odd symmetry lets symmetric quantizers skip negative correlations
    if a.is_symmetric() && b.is_symmetric() {
        (0.0, rho_max)
    } else {
        (-rho_max, rho_max)
    }
}

/// Grid maximization of `|gamma_Q(rho, g_x, g_z) - rho g_x g_z|` for the
/// cross term (3-D box) and the autocovariance term (2-D, both lags share
/// `g_z`). Returns `(S_xz, S_zz)`.
pub fn s_bounds_grid(priors: &PriorBounds, spec_x: &QuantizerSpec, spec_z: &QuantizerSpec, density: usize) -> Result<(f64, f64)> {
    if density < 21 {
        return Err(Error::InvalidArgument(format!("grid density must be at least 21, got {density}")));
    }
    let p = priors;
    let (r0, r1) = rho_range(p.rho_xz_max, spec_x, spec_z);
    let (s_xz, _) = maximize_box(&[r0, p.sigma_x_lo, p.sigma_z_lo], &[r1, p.sigma_x_hi, p.sigma_z_hi], density, |v| {
        let g = quantized_cross_cov(GaussPair { rho: v[0], sigma1: v[1], sigma2: v[2] }, spec_x, spec_z)?;
        Ok((g - v[0] * v[1] * v[2]).abs())
    })?;
    let (r0, r1) = rho_range(p.rho_zz_max, spec_z, spec_z);
    let (s_zz, _) = maximize_box(&[r0, p.sigma_z_lo], &[r1, p.sigma_z_hi], density, |v| {
        let g = quantized_cross_cov(GaussPair { rho: v[0], sigma1: v[1], sigma2: v[1] }, spec_z, spec_z)?;
        Ok((g - v[0] * v[1] * v[1]).abs())
    })?;
    Ok((s_xz, s_zz))
}

/// `S_z = max |Var(Q(z)) - g_z^2|` over the `sigma_z` bracket.
pub fn s_bound_variance(priors: &PriorBounds, spec_z: &QuantizerSpec) -> Result<f64> {
    let (s, _) = maximize_box(&[priors.sigma_z_lo], &[priors.sigma_z_hi], 401, |v| {
        Ok((quantized_variance(v[0], spec_z)? - v[0] * v[0]).abs())
    })?;
    Ok(s)
}

struct Jumps {
    thresholds: Vec<f64>,
    steps: Vec<f64>,
}

fn jumps(spec: &QuantizerSpec) -> Result<Jumps> {
    let (c, l) = spec
        .cells()
        .ok_or_else(|| Error::InvalidArgument("analytic S bounds need a binary or finite quantizer".into()))?;
    Ok(Jumps { steps: l.windows(2).map(|w| w[1] - w[0]).collect(), thresholds: c })
}

/// `K^L`: the Price integrand bounded below at the smallest standard
/// deviations and the worst correlation.
fn k_lower(a: &Jumps, b: &Jumps, g1: f64, g2: f64, rho: f64) -> f64 {
    let den = 2.0 * (1.0 - rho * rho);
    let mut k = 0.0;
    for (c, wa) in a.thresholds.iter().zip(&a.steps) {
        for (d, wb) in b.thresholds.iter().zip(&b.steps) {
            let (u, v) = (c / g1, d / g2);
            k += wa * wb * (-(u * u + v * v + 2.0 * rho * (u * v).abs()) / den).exp();
        }
    }
    k
}

fn k_upper_at(a: &Jumps, b: &Jumps, g1: f64, g2: f64, rho: f64) -> f64 {
    let r = rho / (1.0 - rho * rho);
    let mut k = 0.0;
    for (c, wa) in a.thresholds.iter().zip(&a.steps) {
        for (d, wb) in b.thresholds.iter().zip(&b.steps) {
            let (u, v) = (c / g1, d / g2);
            k += wa * wb * (-0.5 * (u * u + v * v) + r * (u * v).abs()).exp();
        }
    }
    k
}

/// `max |K/(2 pi) asin(rho) - rho g|` over `rho in [0, rho_max]` and
/// `g in [g_lo, g_hi]`. The expression is linear in `g`, so only the two
/// endpoints matter; in `rho` the extremum is at an endpoint or where
/// `K/(2 pi) = g sqrt(1 - rho^2)`.
fn envelope_gap(k: f64, rho_max: f64, g_lo: f64, g_hi: f64) -> f64 {
    let a = k / (2.0 * PI);
    let f = |rho: f64, g: f64| (a * rho.asin() - rho * g).abs();
    let mut best: f64 = 0.0;
    for g in [g_lo, g_hi] {
        best = best.max(f(rho_max, g));
        if a < g {
            let r = (1.0 - (a / g).powi(2)).sqrt();
            if r <= rho_max {
                best = best.max(f(r, g));
            }
        }
    }
    best
}

fn analytic_pair(a: &Jumps, b: &Jumps, rho: f64, x_lo: f64, x_hi: f64, z_lo: f64, z_hi: f64) -> Result<f64> {
    let kl = k_lower(a, b, x_lo, z_lo, rho);
    let (ku, _) = maximize_box(&[x_lo, z_lo], &[x_hi, z_hi], 101, |v| Ok(k_upper_at(a, b, v[0], v[1], rho)))?;
    let g_lo = x_lo * z_lo;
    let g_hi = x_hi * z_hi;
    Ok(envelope_gap(ku, rho, g_lo, g_hi).max(envelope_gap(kl, rho, g_lo, g_hi)))
}

/// Conservative `(S_xz, S_zz)` from the exponential envelopes of the Price
/// integrand. Both the `K^U` and `K^L` gaps are maximized over the prior box,
/// which is what a bound on the absolute deviation needs.
pub fn s_bounds_analytic(priors: &PriorBounds, spec_x: &QuantizerSpec, spec_z: &QuantizerSpec) -> Result<(f64, f64)> {
    let p = priors;
    let jx = jumps(spec_x)?;
    let jz = jumps(spec_z)?;
    let s_xz = analytic_pair(&jx, &jz, p.rho_xz_max, p.sigma_x_lo, p.sigma_x_hi, p.sigma_z_lo, p.sigma_z_hi)?;
    let s_zz = analytic_pair(&jz, &jz, p.rho_zz_max, p.sigma_z_lo, p.sigma_z_hi, p.sigma_z_lo, p.sigma_z_hi)?;
    Ok((s_xz, s_zz))
}
