//! Quantization-perturbation bounds and the sufficient conditions built on
//! them.
//!
//! Every test here has the same shape: a bound `b` on the spectral norm of
//! `C^Q(m, q) - C_G(m, q)` is compared with `sigma_min(C^Q(m, q))`. If
//! `b < sigma_min` for some `q`, the unquantized matrix cannot be rank
//! deficient and x Granger-causes z. The converse is never claimed.

mod sbounds;
mod uniform;
mod zeta;

use serde::{Deserialize, Serialize};

pub use sbounds::{s_bounds_analytic, s_bounds_grid, s_bound_variance};
pub use uniform::{highres_epsilon_norm_bound, midtread_bounds, HighResBound, MidTreadBound};
pub use zeta::riemann_zeta;

use crate::causality::{build_causality_matrix, MatrixKind, MomentSource, Verdict};
use crate::error::{Error, Result};
use crate::gausslink::RHO_CAP;
use crate::quantize::QuantizerSpec;

/// A-priori bounds on the unquantized statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorBounds {
    /// Bound on `max_k |rho_xz(k)|`.
    pub rho_xz_max: f64,
    /// Bound on `max_{k != 0} |rho_zz(k)|`.
    pub rho_zz_max: f64,
    pub sigma_x_lo: f64,
    pub sigma_x_hi: f64,
    pub sigma_z_lo: f64,
    pub sigma_z_hi: f64,
    /// Bound on `max_k |gamma_xz(k)|`.
    pub gamma_xz_max: f64,
}

impl PriorBounds {
    /// Brackets of total width `width` centered on the given standard
    /// deviations; `gamma_xz_max` defaults to `rho_xz_max * sigma_x_hi * sigma_z_hi`.
    pub fn centered(sigma_x: f64, sigma_z: f64, width: f64, rho_xz_max: f64, rho_zz_max: f64) -> Result<Self> {
        let h = width / 2.0;
        let p = PriorBounds {
            rho_xz_max,
            rho_zz_max,
            sigma_x_lo: sigma_x - h,
            sigma_x_hi: sigma_x + h,
            sigma_z_lo: sigma_z - h,
            sigma_z_hi: sigma_z + h,
            gamma_xz_max: rho_xz_max * (sigma_x + h) * (sigma_z + h),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bracket = |lo: f64, hi: f64, name: &str| {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} bracket needs 0 < lo <= hi, got [{lo}, {hi}]")));
            }
            Ok(())
        };
        bracket(self.sigma_x_lo, self.sigma_x_hi, "sigma_x")?;
        bracket(self.sigma_z_lo, self.sigma_z_hi, "sigma_z")?;
        for (v, name) in [(self.rho_xz_max, "rho_xz_max"), (self.rho_zz_max, "rho_zz_max")] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if !(self.gamma_xz_max >= 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_xz_max must be >= 0, got {}", self.gamma_xz_max)));
        }
        Ok(())
    }

    fn check_rho_cap(&self) -> Result<()> {
        if self.rho_xz_max > RHO_CAP || self.rho_zz_max > RHO_CAP {
            return Err(Error::InvalidArgument(format!("correlation bounds must stay below {RHO_CAP} for the Price integral")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SMethod {
    /// Direct maximization over a grid with `density` points per axis.
    Grid { density: usize },
    /// Closed-form envelope of the Price integrand; always conservative.
    Analytic,
}

impl Default for SMethod {
    fn default() -> Self {
        SMethod::Grid { density: 41 }
    }
}

/// Element-wise perturbation bounds for a finite quantizer pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SBounds {
    pub s_xz: f64,
    pub s_zz: f64,
    pub s_z: f64,
    pub method: SMethod,
}

pub fn s_bounds(priors: &PriorBounds, spec_x: &QuantizerSpec, spec_z: &QuantizerSpec, method: SMethod) -> Result<SBounds> {
    priors.validate()?;
    priors.check_rho_cap()?;
    let s_z = s_bound_variance(priors, spec_z)?;
    let (s_xz, s_zz) = match method {
        SMethod::Grid { density } => s_bounds_grid(priors, spec_x, spec_z, density)?,
        SMethod::Analytic => s_bounds_analytic(priors, spec_x, spec_z)?,
    };
    Ok(SBounds { s_xz, s_zz, s_z, method })
}

/// `N_o = max{(m+1) S_xz, (m+1) S_zz, m S_zz + S_z}` bounds the 1-norm and
/// `N_I = m S_xz + (q-1) S_zz + max{S_zz, S_z}` the infinity norm of the
/// perturbation matrix.
pub fn nonuniform_norm_bounds(s_xz: f64, s_zz: f64, s_z: f64, m: usize, q: usize) -> Result<(f64, f64)> {
    check_orders(m, q)?;
    if s_xz < 0.0 || s_zz < 0.0 || s_z < 0.0 {
        return Err(Error::InvalidArgument("S values must be nonnegative".into()));
    }
    Ok(norm_pair(s_xz, s_zz, s_z, m, q))
}

fn norm_pair(a_xz: f64, a_zz: f64, a_z: f64, m: usize, q: usize) -> (f64, f64) {
    let (mf, qf) = (m as f64, q as f64);
    let n_one = ((mf + 1.0) * a_xz).max((mf + 1.0) * a_zz).max(mf * a_zz + a_z);
    let n_inf = mf * a_xz + (qf - 1.0) * a_zz + a_zz.max(a_z);
    (n_one, n_inf)
}

fn check_orders(m: usize, q: usize) -> Result<()> {
    if m < 1 || q < m {
        return Err(Error::InvalidArgument(format!("need q >= m >= 1, got m = {m}, q = {q}")));
    }
    Ok(())
}

/// Outcome at one depth `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthMargin {
    pub q: usize,
    pub sigma_min_q: f64,
    pub bound: f64,
    /// `bound - sigma_min_q`; negative means the sufficient condition holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientDecision {
    pub verdict: Verdict,
    pub depths: Vec<DepthMargin>,
    /// Which perturbation bound produced the left-hand side.
    pub bound_kind: String,
}

impl SufficientDecision {
    pub fn margin_at(&self, q: usize) -> Option<f64> {
        self.depths.iter().find(|d| d.q == q).map(|d| d.margin)
    }

    pub fn best_margin(&self) -> f64 {
        self.depths.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min)
    }
}

fn decide<S, F>(moments: &S, m: usize, q_range: &[usize], bound_kind: &str, mut bound_at: F) -> Result<SufficientDecision>
where
    S: MomentSource + ?Sized,
    F: FnMut(usize) -> Result<f64>,
{
    if q_range.is_empty() {
        return Err(Error::InvalidArgument("empty q range".into()));
    }
    let mut depths = Vec::with_capacity(q_range.len());
    for &q in q_range {
        check_orders(m, q)?;
        let c = build_causality_matrix(moments, m, q, MatrixKind::Quantized)?;
        let sigma_min_q = c.sigma_min()?;
        let bound = bound_at(q)?;
        depths.push(DepthMargin { q, sigma_min_q, bound, margin: bound - sigma_min_q });
    }
    let verdict = if depths.iter().any(|d| d.margin < 0.0) { Verdict::Causal } else { Verdict::NotDecided };
    Ok(SufficientDecision { verdict, depths, bound_kind: bound_kind.to_string() })
}

/// Finite-quantizer sufficient condition: CAUSAL if `sqrt(N_o N_I) <
/// sigma_min(C^Q(m, q))` for some `q` in `q_range`.
pub fn nonuniform_sufficient_test<S: MomentSource + ?Sized>(
    quantized: &S,
    s: &SBounds,
    m: usize,
    q_range: &[usize],
) -> Result<SufficientDecision> {
    let kind = match s.method {
        SMethod::Grid { .. } => "nonuniform-grid",
        SMethod::Analytic => "nonuniform-analytic",
    };
    decide(quantized, m, q_range, kind, |q| {
        let (no, ni) = nonuniform_norm_bounds(s.s_xz, s.s_zz, s.s_z, m, q)?;
        Ok((no * ni).sqrt())
    })
}

/// Infinite mid-tread sufficient condition with the zeta-function bounds.
pub fn midtread_sufficient_test<S: MomentSource + ?Sized>(
    quantized: &S,
    priors: &PriorBounds,
    delta_x: f64,
    delta_z: f64,
    m: usize,
    q_range: &[usize],
) -> Result<SufficientDecision> {
    decide(quantized, m, q_range, "midtread-zeta", |q| {
        let b = midtread_bounds(priors, delta_x, delta_z, m, q)?;
        Ok((b.n_inf * b.n_one).sqrt())
    })
}

/// High-resolution sufficient condition using the explicit (constant
/// carrying) series bounds rather than the leading-order formula.
pub fn highres_sufficient_test<S: MomentSource + ?Sized>(
    quantized: &S,
    priors: &PriorBounds,
    delta_x: f64,
    delta_z: f64,
    m: usize,
    q_range: &[usize],
) -> Result<SufficientDecision> {
    decide(quantized, m, q_range, "highres-explicit", |q| {
        Ok(highres_epsilon_norm_bound(priors, delta_x, delta_z, m, q)?.bound)
    })
}
