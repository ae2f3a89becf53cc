//! Links between Gaussian second moments and the moments of quantized
//! versions: the arcsine law, the Price integral for finite quantizers, and
//! Fourier series for the infinite mid-tread quantizer.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quantize::QuantizerSpec;

/// Correlation cap for the Price integral. The integrand stays smooth below it.
pub const RHO_CAP: f64 = 0.999;

/// Absolute tolerance used for every Price integral.
pub const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPair {
    pub rho: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl GaussPair {
    pub fn new(rho: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("|rho| must be < 1, got {rho}")));
        }
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(Error::Domain(format!("standard deviations must be positive, got {sigma1}, {sigma2}")));
        }
        Ok(GaussPair { rho, sigma1, sigma2 })
    }
}

/// Gaussian correlation recovered from the covariance of two `±1` sign
/// sequences: `sin(pi * gq / 2)`.
pub fn vanvleck_invert(gq: f64) -> Result<f64> {
    if !(gq.abs() <= 1.0) {
        return Err(Error::Domain(format!("covariance of +-1 variables must lie in [-1, 1], got {gq}")));
    }
    Ok((PI * gq / 2.0).sin())
}

/// Arcsine law: `(2/pi) asin(rho)`.
pub fn vanvleck_forward(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::Domain(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    Ok(FRAC_2_PI * rho.asin())
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

// Kronrod 15-point nodes/weights on [-1, 1] with embedded Gauss 7-point weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod integration: keeps bisecting the interval
/// with the worst error estimate until the total estimate drops below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol {
        if parts.len() >= MAX_INTERVALS {
            let worst = parts.iter().max_by(|x, y| x.3.total_cmp(&y.3)).unwrap();
            return Err(Error::Quadrature { lo: worst.0, hi: worst.1, err: total_err });
        }
        let (i, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).unwrap();
        let (lo, hi, _, err) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total_err += e1 + e2 - err;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    Ok(parts.iter().map(|p| p.2).sum())
}

fn finite_cells(spec: &QuantizerSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    spec.cells()
        .ok_or_else(|| Error::InvalidArgument("the Price integral needs a binary or finite quantizer".into()))
}

/// Covariance of `Q_a(w1)` and `Q_b(w2)` for zero-mean jointly Gaussian
/// `(w1, w2)`.
///
/// Sums, over every pair of interior thresholds `(c_i, d_j)`, the level jumps
/// times `int_0^rho exp(-(a^2 - 2yab + b^2) / (2(1-y^2))) / (2 pi sqrt(1-y^2)) dy`
/// with `a = c_i/sigma1`, `b = d_j/sigma2`.
pub fn quantized_cross_cov(pair: GaussPair, spec_a: &QuantizerSpec, spec_b: &QuantizerSpec) -> Result<f64> {
    if pair.rho.abs() > RHO_CAP {
        return Err(Error::Domain(format!("|rho| must be <= {RHO_CAP}, got {}", pair.rho)));
    }
    let (ca, la) = finite_cells(spec_a)?;
    let (cb, lb) = finite_cells(spec_b)?;
    if pair.rho == 0.0 || ca.is_empty() || cb.is_empty() {
        return Ok(0.0);
    }
    let mut terms = Vec::with_capacity(ca.len() * cb.len());
    for (i, c) in ca.iter().enumerate() {
        for (j, d) in cb.iter().enumerate() {
            let w = (la[i + 1] - la[i]) * (lb[j + 1] - lb[j]);
            let a = c / pair.sigma1;
            let b = d / pair.sigma2;
            terms.push((w, a * a + b * b, a * b));
        }
    }
    let f = |y: f64| {
        let om = 1.0 - y * y;
        let s: f64 = terms.iter().map(|&(w, sq, ab)| w * (-(sq - 2.0 * y * ab) / (2.0 * om)).exp()).sum();
        s / (2.0 * PI * om.sqrt())
    };
    let (lo, hi, sign) = if pair.rho > 0.0 { (0.0, pair.rho, 1.0) } else { (pair.rho, 0.0, -1.0) };
    Ok(sign * integrate(f, lo, hi, QUAD_TOL)?)
}

/// Mean and variance of `Q(w)` for `w ~ N(0, sigma^2)`.
pub fn quantized_mean_variance(sigma: f64, spec: &QuantizerSpec) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let (c, l) = finite_cells(spec)?;
    let mut prev = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (i, level) in l.iter().enumerate() {
        let next = if i < c.len() { std_normal_cdf(c[i] / sigma) } else { 1.0 };
        let p = next - prev;
        m1 += level * p;
        m2 += level * level * p;
        prev = next;
    }
    Ok((m1, (m2 - m1 * m1).max(0.0)))
}

pub fn quantized_variance(sigma: f64, spec: &QuantizerSpec) -> Result<f64> {
    quantized_mean_variance(sigma, spec).map(|(_, v)| v)
}

const SERIES_TOL: f64 = 1e-18;

/// `sum_{n>=1} (-1)^n exp(-2 pi^2 n^2 / k^2)` with `k = delta / sigma`.
fn alt_gauss_sum(k: f64) -> f64 {
    let mut s = 0.0;
    for n in 1..10_000 {
        let t = (-2.0 * PI * PI * (n * n) as f64 / (k * k)).exp();
        s += if n % 2 == 1 { -t } else { t };
        if t < SERIES_TOL {
            break;
        }
    }
    s
}

/// Covariance of `w1` with the mid-tread quantization error of `w2`.
pub fn midtread_signal_error_cov(pair: GaussPair, delta2: f64) -> f64 {
    2.0 * pair.rho * pair.sigma1 * pair.sigma2 * alt_gauss_sum(delta2 / pair.sigma2)
}

/// Covariance of the two mid-tread quantization errors.
pub fn midtread_error_error_cov(pair: GaussPair, delta1: f64, delta2: f64) -> f64 {
    let k1 = delta1 / pair.sigma1;
    let k2 = delta2 / pair.sigma2;
    let rho = pair.rho;
    let c = 2.0 * PI * PI;
    let mut s = 0.0;
    for n1 in 1..2000usize {
        let a = n1 as f64 / k1;
        let mut row = 0.0;
        let mut any = false;
        for n2 in 1..2000usize {
            let b = n2 as f64 / k2;
            let e = -c * (a * a + b * b - 2.0 * rho * a * b);
            if e < -45.0 && b > a {
                break;
            }
            if e < -45.0 {
                continue;
            }
            any = true;
            let t = e.exp() * (-(-2.0 * c * 2.0 * rho * a * b).exp_m1()) / (n1 * n2) as f64;
            row += if (n1 + n2) % 2 == 0 { t } else { -t };
        }
        s += row;
        if !any && a > 1.0 {
            break;
        }
    }
    delta1 * delta2 / c * s
}

/// Covariance of two mid-tread quantized Gaussians.
pub fn midtread_cross_cov(pair: GaussPair, delta1: f64, delta2: f64) -> f64 {
    let swapped = GaussPair { rho: pair.rho, sigma1: pair.sigma2, sigma2: pair.sigma1 };
    pair.rho * pair.sigma1 * pair.sigma2
        + midtread_signal_error_cov(pair, delta2)
        + midtread_signal_error_cov(swapped, delta1)
        + midtread_error_error_cov(pair, delta1, delta2)
}

/// Variance of a mid-tread quantized `N(0, sigma^2)` variable.
pub fn midtread_variance(sigma: f64, delta: f64) -> f64 {
    let k = delta / sigma;
    let mut err2 = delta * delta / 12.0;
    let mut tail = 0.0;
    for n in 1..10_000usize {
        let t = (-2.0 * PI * PI * (n * n) as f64 / (k * k)).exp() / (n * n) as f64;
        tail += if n % 2 == 1 { -t } else { t };
        if t < SERIES_TOL {
            break;
        }
    }
    err2 += delta * delta / (PI * PI) * tail;
    sigma * sigma + 4.0 * sigma * sigma * alt_gauss_sum(k) + err2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::make_saturated_uniform;
    use proptest::prelude::*;

    #[test]
    fn vanvleck_values() {
        assert_eq!(vanvleck_invert(0.0).unwrap(), 0.0);
        assert!((vanvleck_invert(1.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((vanvleck_invert(2.0 / 3.0).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((vanvleck_forward(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((vanvleck_forward(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((vanvleck_forward(-0.5).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(vanvleck_invert(1.01).is_err());
        assert!(vanvleck_forward(-1.5).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        assert!(std_normal_cdf(-8.0) < 1e-15);
        // Phi(-8) = 6.22096057427178e-16
        assert!((std_normal_cdf(-8.0) - 6.22096057427178e-16).abs() < 1e-28);
        for i in 0..=80 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn integrate_polynomial_and_peak() {
        let v = integrate(|x| x * x * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0 * (1.0f64 / 1e-2).atan() / 1e-2).abs() < 1e-8);
    }

    #[test]
    fn binary_collapse_to_arcsine() {
        let b = QuantizerSpec::binary(0.0).unwrap();
        for i in -99..=99 {
            let rho = i as f64 / 100.0;
            let g = quantized_cross_cov(GaussPair::new(rho, 1.0, 1.0).unwrap(), &b, &b).unwrap();
            assert!((g - vanvleck_forward(rho).unwrap()).abs() < 1e-10, "rho {rho}");
        }
        let g = quantized_cross_cov(GaussPair::new(0.5, 2.0, 0.3).unwrap(), &b, &b).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn zero_rho_gives_zero() {
        let s = make_saturated_uniform(-3.0, 3.0, 2).unwrap();
        assert_eq!(quantized_cross_cov(GaussPair::new(0.0, 1.0, 2.0).unwrap(), &s, &s).unwrap(), 0.0);
    }

    #[test]
    fn rho_cap_enforced() {
        let b = QuantizerSpec::binary(0.0).unwrap();
        assert!(quantized_cross_cov(GaussPair::new(0.9995, 1.0, 1.0).unwrap(), &b, &b).is_err());
        assert!(GaussPair::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn variance_trivial_cases() {
        let b = QuantizerSpec::binary(0.0).unwrap();
        assert!((quantized_variance(3.7, &b).unwrap() - 1.0).abs() < 1e-15);
        let one = QuantizerSpec::finite(vec![], vec![2.5]).unwrap();
        assert_eq!(quantized_variance(1.0, &one).unwrap(), 0.0);
    }

    #[test]
    fn fine_grid_recovers_gaussian_moments() {
        // a dense finite quantizer behaves like the identity
        let n = 401;
        let thresholds: Vec<f64> = (0..n).map(|i| -10.0 + 20.0 * (i as f64 + 0.5) / n as f64).collect();
        let levels: Vec<f64> = (0..=n).map(|i| -10.0 + 20.0 * i as f64 / n as f64).collect();
        let s = QuantizerSpec::finite(thresholds, levels).unwrap();
        let v = quantized_variance(1.0, &s).unwrap();
        assert!((v - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn midtread_series_matches_price_integral() {
        // the infinite mid-tread quantizer truncated far in the tails is a
        // finite quantizer, so both routes must agree
        let delta = 0.8;
        let cells: Vec<f64> = (-20..20).map(|i| (i as f64 + 0.5) * delta).collect();
        let levels: Vec<f64> = (-20..=20).map(|i| i as f64 * delta).collect();
        let s = QuantizerSpec::finite(cells, levels).unwrap();
        for &(rho, s1, s2) in &[(0.3, 1.0, 1.5), (-0.6, 0.7, 1.1), (0.85, 1.2, 0.9)] {
            let p = GaussPair::new(rho, s1, s2).unwrap();
            let a = quantized_cross_cov(p, &s, &s).unwrap();
            let b = midtread_cross_cov(p, delta, delta);
            assert!((a - b).abs() < 1e-9, "rho {rho}: {a} vs {b}");
        }
        for &sig in &[0.3, 0.7, 1.4] {
            let a = quantized_variance(sig, &s).unwrap();
            let b = midtread_variance(sig, delta);
            assert!((a - b).abs() < 1e-12, "sigma {sig}: {a} vs {b}");
        }
    }

    #[test]
    fn monotone_in_rho() {
        let sx = make_saturated_uniform(-3.0, 3.0, 2).unwrap();
        let sz = make_saturated_uniform(-5.0, 5.0, 2).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let rho = 0.999 * i as f64 / 49.0;
            let g = quantized_cross_cov(GaussPair::new(rho, 2.5, 2.2).unwrap(), &sx, &sz).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    proptest! {
        #[test]
        fn roundtrip(rho in -1.0f64..=1.0) {
            let back = vanvleck_invert(vanvleck_forward(rho).unwrap()).unwrap();
            prop_assert!((back - rho).abs() <= 1e-14);
        }

        #[test]
        fn antisymmetric_for_symmetric_specs(rho in 0.0f64..0.99, s1 in 0.3f64..3.0, s2 in 0.3f64..3.0) {
            let q = QuantizerSpec::finite(vec![-1.0, 0.0, 1.0], vec![-1.5, -0.5, 0.5, 1.5]).unwrap();
            let p = quantized_cross_cov(GaussPair::new(rho, s1, s2).unwrap(), &q, &q).unwrap();
            let n = quantized_cross_cov(GaussPair::new(-rho, s1, s2).unwrap(), &q, &q).unwrap();
            prop_assert!((p + n).abs() <= 1e-11);
        }
    }
}
