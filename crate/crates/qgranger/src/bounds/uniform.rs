use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::{check_orders, norm_pair, riemann_zeta, PriorBounds};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidTreadBound {
    pub n_inf: f64,
    pub n_one: f64,
    pub varrho1: f64,
    pub varrho2: f64,
    pub varrho3: f64,
    pub s_x: f64,
    pub s_z: f64,
    pub s_xz: f64,
    pub s_zz: f64,
}

fn check_steps(priors: &PriorBounds, delta_x: f64, delta_z: f64) -> Result<()> {
    priors.validate()?;
    if !(delta_x > 0.0 && delta_z > 0.0) {
        return Err(Error::InvalidArgument(format!("steps must be positive, got {delta_x}, {delta_z}")));
    }
    Ok(())
}

/// Zeta-function bounds for infinite mid-tread quantizers with steps
/// `delta_x`, `delta_z`. Valid while `delta < 2 pi sigma_lo` for both signals.
pub fn midtread_bounds(priors: &PriorBounds, delta_x: f64, delta_z: f64, m: usize, q: usize) -> Result<MidTreadBound> {
    check_steps(priors, delta_x, delta_z)?;
    check_orders(m, q)?;
    let p = priors;
    if delta_x >= 2.0 * PI * p.sigma_x_lo {
        return Err(Error::Domain(format!("need delta_x < 2 pi sigma_x_lo = {}", 2.0 * PI * p.sigma_x_lo)));
    }
    if delta_z >= 2.0 * PI * p.sigma_z_lo {
        return Err(Error::Domain(format!("need delta_z < 2 pi sigma_z_lo = {}", 2.0 * PI * p.sigma_z_lo)));
    }
    let pi2 = PI * PI;
    let (gx, gz) = (p.sigma_x_lo, p.sigma_z_lo);
    let s_x = 2.0 * pi2 * gx * gx / (delta_x * delta_x);
    let s_z = 2.0 * pi2 * gz * gz / (delta_z * delta_z);
    let s_xz = 4.0 * pi2 * gx * gz * (1.0 - p.rho_xz_max) / (delta_x * delta_z);
    let s_zz = 4.0 * pi2 * gz * gz * (1.0 - p.rho_zz_max) / (delta_z * delta_z);
    if !(s_xz > 0.0 && s_zz > 0.0) {
        return Err(Error::Domain("correlation bounds too close to 1".into()));
    }
    let z = riemann_zeta;
    let e = |s: f64| (-s).exp();
    let prod_term = |s: f64| -> Result<f64> { Ok(z(s + 1.0)?.powi(2) / s * e(s)) };

    let varrho1 = 4.0 * gz * gz * (1.0 - p.rho_zz_max) * prod_term(s_zz)? + 4.0 * p.rho_zz_max * gz * gz * z(2.0 * s_z)? * e(s_z);
    let varrho2 = 2.0
        * (p.rho_xz_max * (p.sigma_x_hi * gz * z(2.0 * s_z)? * e(s_z) + p.sigma_z_hi * gx * z(2.0 * s_x)? * e(s_x))
            + 2.0 * (1.0 - p.rho_xz_max) * gz * gx * prod_term(s_xz)?);
    // 2^{-s} e^{-s} computed in one exponent so large s underflows cleanly
    let varrho3 = delta_z * delta_z / 12.0
        + delta_z * delta_z / pi2 * e(s_z) * z(2.0 * s_z + 2.0)?
        + 4.0 * p.sigma_z_hi * p.sigma_z_hi * (-s_z * (1.0 + LN_2)).exp() * z(2.0 * s_z)?;

    let (n_one, n_inf) = norm_pair(varrho2, varrho1, varrho3, m, q);
    Ok(MidTreadBound { n_inf, n_one, varrho1, varrho2, varrho3, s_x, s_z, s_xz, s_zz })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighResBound {
    /// `sqrt(N_1 N_inf)` with the explicit element bounds.
    pub bound: f64,
    pub n_one: f64,
    pub n_inf: f64,
    /// Element bounds: cross term, lagged autocovariance, variance.
    pub e_xz: f64,
    pub e_zz: f64,
    pub e_z: f64,
    /// Leading-order formula `4(m+1) g_xz exp(-2 pi^2 sigma_x^2 / delta_x^2) + delta_z^2 / 12`,
    /// reported for comparison only.
    pub leading_order: f64,
}

/// `e^{-a} / (1 - e^{-a})`, the geometric tail with ratio `e^{-a}`.
fn geometric_tail(a: f64) -> f64 {
    let t = (-a).exp();
    t / (1.0 - t)
}

/// Explicit bound on `||C^Q - C_G||_2` for infinite mid-tread quantizers.
///
/// Uses, at the worst-case end of each prior bracket,
/// `|g_{w1 e2}| <= 2 |g_{w1 w2}| t(2 pi^2 / k2^2)`,
/// `|g_{e1 e2}| <= (D1 D2 / pi^2) t(2 pi^2 (1-rho) / k1^2) t(2 pi^2 (1-rho) / k2^2)` and
/// `|Var(Q) - s^2 - D^2/12| <= (D^2/pi^2 + 4 s^2) t(2 pi^2 / k^2)`,
/// with `t(a) = e^{-a}/(1-e^{-a})` and `k = D / sigma_lo`, combined through
/// `||.||_2 <= sqrt(||.||_1 ||.||_inf)`.
pub fn highres_epsilon_norm_bound(priors: &PriorBounds, delta_x: f64, delta_z: f64, m: usize, q: usize) -> Result<HighResBound> {
    check_steps(priors, delta_x, delta_z)?;
    check_orders(m, q)?;
    let p = priors;
    let kx = delta_x / p.sigma_x_lo;
    let kz = delta_z / p.sigma_z_lo;
    let rho = p.rho_xz_max.max(p.rho_zz_max);
    let limit = 2.0 * PI * (1.0 - rho).sqrt();
    if kx >= limit || kz >= limit {
        return Err(Error::Domain(format!(
            "high-resolution series need delta/sigma_lo < 2 pi sqrt(1 - rho_max) = {limit:.4}; got k_x = {kx:.4}, k_z = {kz:.4}"
        )));
    }
    let pi2 = PI * PI;
    let hx = geometric_tail(2.0 * pi2 / (kx * kx));
    let hz = geometric_tail(2.0 * pi2 / (kz * kz));
    let g = |r: f64, k: f64| geometric_tail(2.0 * pi2 * (1.0 - r) / (k * k));

    let e_xz = 2.0 * p.gamma_xz_max * (hx + hz) + delta_x * delta_z / pi2 * g(p.rho_xz_max, kx) * g(p.rho_xz_max, kz);
    let gz_hi2 = p.sigma_z_hi * p.sigma_z_hi;
    let e_zz = 4.0 * p.rho_zz_max * gz_hi2 * hz + delta_z * delta_z / pi2 * g(p.rho_zz_max, kz).powi(2);
    let e_z = delta_z * delta_z / 12.0 + (delta_z * delta_z / pi2 + 4.0 * gz_hi2) * hz;

    let (n_one, n_inf) = norm_pair(e_xz, e_zz, e_z, m, q);
    let leading_order = 4.0 * (m as f64 + 1.0) * p.gamma_xz_max * (-2.0 * pi2 / (kx * kx)).exp() + delta_z * delta_z / 12.0;
    Ok(HighResBound { bound: (n_one * n_inf).sqrt(), n_one, n_inf, e_xz, e_zz, e_z, leading_order })
}
