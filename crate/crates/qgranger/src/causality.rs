//! Causality matrices, singular-value rank tests and the Gaussian
//! conditional-distribution criteria.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gausslink::vanvleck_invert;
use crate::moments::LaggedMoments;
use crate::signals::TrueMoments;

/// Anything that can answer `Cov(x_t, z_{t+k})` and `Cov(z_t, z_{t+k})`.
pub trait MomentSource {
    fn xz(&self, k: i64) -> Option<f64>;
    fn zz(&self, k: i64) -> Option<f64>;
}

impl MomentSource for TrueMoments {
    fn xz(&self, k: i64) -> Option<f64> {
        TrueMoments::xz(self, k)
    }
    fn zz(&self, k: i64) -> Option<f64> {
        TrueMoments::zz(self, k)
    }
}

impl MomentSource for LaggedMoments {
    fn xz(&self, k: i64) -> Option<f64> {
        LaggedMoments::xz(self, k)
    }
    fn zz(&self, k: i64) -> Option<f64> {
        LaggedMoments::zz(self, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Covariance,
    Correlation,
    Quantized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityMatrix {
    pub m: usize,
    pub ell: usize,
    pub kind: MatrixKind,
    /// Row-major `(m+1) x (ell+m)` entries.
    pub rows: Vec<Vec<f64>>,
}

impl CausalityMatrix {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let nr = self.rows.len();
        let nc = self.rows.first().map_or(0, |r| r.len());
        DMatrix::from_fn(nr, nc, |i, j| self.rows[i][j])
    }

    fn from_matrix(m: usize, ell: usize, kind: MatrixKind, a: &DMatrix<f64>) -> Self {
        let rows = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
        CausalityMatrix { m, ell, kind, rows }
    }

    pub fn sigma_min(&self) -> Result<f64> {
        smallest_singular_value(&self.to_matrix())
    }
}

/// Build the `(m+1) x (ell+m)` causality matrix.
///
/// Row `i` corresponds to `z_{k-m+1+i}`. The three column blocks are
/// `gamma_xz(i-j)` and `gamma_zz(i-j)` for `j < m`, then
/// `gamma_zz(ell-m+i-j)` for `j < ell-m`.
pub fn build_causality_matrix<S: MomentSource + ?Sized>(src: &S, m: usize, ell: usize, kind: MatrixKind) -> Result<CausalityMatrix> {
    if m < 1 || ell < m {
        return Err(Error::InvalidArgument(format!("need ell >= m >= 1, got m = {m}, ell = {ell}")));
    }
    let mut a = DMatrix::zeros(m + 1, ell + m);
    for i in 0..=m {
        for j in 0..m {
            let k = i as i64 - j as i64;
            a[(i, j)] = src.xz(k).ok_or(Error::MissingLag(k))?;
            a[(i, m + j)] = src.zz(k).ok_or(Error::MissingLag(k))?;
        }
        for j in 0..ell - m {
            let k = (ell - m + i) as i64 - j as i64;
            a[(i, 2 * m + j)] = src.zz(k).ok_or(Error::MissingLag(k))?;
        }
    }
    Ok(CausalityMatrix::from_matrix(m, ell, kind, &a))
}

struct Correlations<'a>(&'a LaggedMoments);

impl MomentSource for Correlations<'_> {
    fn xz(&self, k: i64) -> Option<f64> {
        self.0.xz(k).map(|g| vanvleck_invert(g.clamp(-1.0, 1.0)).unwrap())
    }
    fn zz(&self, k: i64) -> Option<f64> {
        if k == 0 {
            return Some(1.0);
        }
        self.0.zz(k).map(|g| vanvleck_invert(g.clamp(-1.0, 1.0)).unwrap())
    }
}

/// Correlation-form matrix `R(m, m)` from covariances of `±1` sign data:
/// every entry goes through `sin(pi g / 2)` and the lag-0 autocorrelation is 1.
pub fn build_binary_r(quantized: &LaggedMoments, m: usize) -> Result<CausalityMatrix> {
    let mi = m as i64;
    for k in (1 - mi..=mi).filter_map(|k| quantized.xz(k)).chain((1..=mi).filter_map(|k| quantized.zz(k))) {
        if k.abs() > 1.0 {
            return Err(Error::Domain(format!("covariance of +-1 data must lie in [-1, 1], got {k}")));
        }
    }
    build_causality_matrix(&Correlations(quantized), m, m, MatrixKind::Correlation)
}

pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if a.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; a.nrows().min(a.ncols())]);
    }
    let svd = SVD::try_new(a.clone(), false, false, f64::EPSILON, 100_000).ok_or(Error::Svd)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> Result<f64> {
    Ok(*singular_values(a)?.last().unwrap())
}

/// Count of singular values above `rel_tol * sigma_max * max(rows, cols)`.
pub fn numeric_rank(a: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let cut = rel_tol * s[0] * a.nrows().max(a.ncols()) as f64;
    Ok(s.iter().filter(|&&v| v > cut).count())
}

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Joint covariance of `(X, Y, Z, W)` stored in that block order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBlocks {
    pub joint: DMatrix<f64>,
    pub dim_x: usize,
    pub dim_y: usize,
    pub dim_z: usize,
    pub dim_w: usize,
}

impl GaussianBlocks {
    pub fn new(joint: DMatrix<f64>, dim_x: usize, dim_y: usize, dim_z: usize, dim_w: usize) -> Result<Self> {
        let d = dim_x + dim_y + dim_z + dim_w;
        if joint.shape() != (d, d) {
            return Err(Error::InvalidArgument(format!("joint covariance must be {d}x{d}")));
        }
        if dim_x == 0 || dim_z == 0 {
            return Err(Error::InvalidArgument("X and Z must be non-empty".into()));
        }
        let b = GaussianBlocks { joint, dim_x, dim_y, dim_z, dim_w };
        let lmin = sym_eigenvalues(&b.gamma_yzw()).first().copied().unwrap_or(f64::INFINITY);
        if lmin <= 1e-10 {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        Ok(b)
    }

    fn x(&self) -> Vec<usize> {
        (0..self.dim_x).collect()
    }
    fn y(&self) -> Vec<usize> {
        (self.dim_x..self.dim_x + self.dim_y).collect()
    }
    fn z(&self) -> Vec<usize> {
        let s = self.dim_x + self.dim_y;
        (s..s + self.dim_z).collect()
    }
    fn w(&self) -> Vec<usize> {
        let s = self.dim_x + self.dim_y + self.dim_z;
        (s..s + self.dim_w).collect()
    }

    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.joint[(rows[i], cols[j])])
    }

    pub fn gamma_yzw(&self) -> DMatrix<f64> {
        let v = [self.y(), self.z(), self.w()].concat();
        self.block(&v, &v)
    }

    /// `[G_XY G_XZ G_XW; G_ZY G_ZZ G_ZW]`.
    pub fn rank_matrix(&self) -> DMatrix<f64> {
        let rows = [self.x(), self.z()].concat();
        let cols = [self.y(), self.z(), self.w()].concat();
        self.block(&rows, &cols)
    }
}

/// Eigenvalues of the symmetrized matrix, ascending.
fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return vec![];
    }
    let s = (a + a.transpose()) * 0.5;
    let mut e: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// True iff the conditional laws of X given (Z, Y) and given (Z, W) coincide,
/// i.e. the rank matrix has rank `dim_z`.
pub fn conditional_equality_rank(blocks: &GaussianBlocks) -> Result<bool> {
    Ok(numeric_rank(&blocks.rank_matrix(), DEFAULT_RANK_TOL)? == blocks.dim_z)
}

/// Scale factor in the lower bound on the variance of the conditional-mean gap:
/// `min(l_max(G_[ZY])^-2, l_max(G_[ZW])^-2) * l_min(G_[YZW])`.
pub fn conditional_distance_phi(blocks: &GaussianBlocks) -> f64 {
    let z = blocks.z();
    let zy = [z.clone(), blocks.y()].concat();
    let zw = [z, blocks.w()].concat();
    let top = |idx: &[usize]| *sym_eigenvalues(&blocks.block(idx, idx)).last().unwrap();
    let lmin = sym_eigenvalues(&blocks.gamma_yzw())[0];
    top(&zy).powi(-2).min(top(&zw).powi(-2)) * lmin
}

/// Lower bound `phi * sigma_min^2(rank matrix)` on
/// `Var(E[X | Z, Y] - E[X | Z, W])`. X must be scalar.
pub fn conditional_distance_lower_bound(blocks: &GaussianBlocks) -> Result<f64> {
    if blocks.dim_x != 1 {
        return Err(Error::InvalidArgument("the conditional distance bound needs scalar X".into()));
    }
    let s = smallest_singular_value(&blocks.rank_matrix())?;
    Ok(conditional_distance_phi(blocks) * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Causal,
    NonCausal,
    NotDecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryDecision {
    pub verdict: Verdict,
    pub sigma_min: f64,
    pub theta: f64,
    pub matrix: CausalityMatrix,
}

/// Exact test for sign data: x causes z iff `R(m, m)` has full rank. With
/// estimated moments, full rank means `sigma_min > theta`.
pub fn binary_causality_test(quantized: &LaggedMoments, m: usize, theta: f64) -> Result<BinaryDecision> {
    let r = build_binary_r(quantized, m)?;
    let sigma_min = r.sigma_min()?;
    let verdict = if sigma_min > theta { Verdict::Causal } else { Verdict::NonCausal };
    Ok(BinaryDecision { verdict, sigma_min, theta, matrix: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{paper_example_model, stationary_covariances};
    use std::collections::BTreeMap;

    fn lagged(xz: &[(i64, f64)], zz: &[(i64, f64)]) -> LaggedMoments {
        LaggedMoments {
            gamma_xz: xz.iter().copied().collect(),
            gamma_zz: zz.iter().copied().collect(),
            var_z: zz.iter().find(|p| p.0 == 0).map_or(1.0, |p| p.1),
            sample_count: 1000,
            mean_x: 0.0,
            mean_z: 0.0,
        }
    }

    #[test]
    fn white_independent_m1() {
        let src = lagged(&[(0, 0.0), (1, 0.0)], &[(0, 1.0), (1, 0.0)]);
        let c = build_causality_matrix(&src, 1, 1, MatrixKind::Covariance).unwrap();
        assert_eq!(c.rows, vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(numeric_rank(&c.to_matrix(), DEFAULT_RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn index_map() {
        let xz: Vec<(i64, f64)> = (-1..=2).map(|k| (k, 10.0 + k as f64)).collect();
        let zz: Vec<(i64, f64)> = (0..=4).map(|k| (k, 20.0 + k as f64)).collect();
        let c = build_causality_matrix(&lagged(&xz, &zz), 2, 4, MatrixKind::Covariance).unwrap();
        assert_eq!(c.rows[0], vec![10.0, 9.0, 20.0, 21.0, 22.0, 21.0]);
        assert_eq!(c.rows[2], vec![12.0, 11.0, 22.0, 21.0, 24.0, 23.0]);
    }

    #[test]
    fn missing_lag_named() {
        let src = lagged(&[(0, 0.0)], &[(0, 1.0)]);
        assert!(matches!(build_causality_matrix(&src, 1, 1, MatrixKind::Covariance), Err(Error::MissingLag(1))));
        assert!(build_causality_matrix(&src, 2, 1, MatrixKind::Covariance).is_err());
    }

    #[test]
    fn example_models_rank() {
        let t = stationary_covariances(&paper_example_model(true), 12).unwrap();
        let c = build_causality_matrix(&t, 2, 2, MatrixKind::Covariance).unwrap();
        assert_eq!((c.rows.len(), c.rows[0].len()), (3, 4));
        assert!(c.sigma_min().unwrap() > 1.0);
        let t = stationary_covariances(&paper_example_model(false), 12).unwrap();
        for ell in 2..=6 {
            let c = build_causality_matrix(&t, 2, ell, MatrixKind::Covariance).unwrap();
            assert_eq!(numeric_rank(&c.to_matrix(), DEFAULT_RANK_TOL).unwrap(), 2);
            assert!(c.sigma_min().unwrap() < 1e-10);
        }
    }

    #[test]
    fn svd_trivial() {
        assert_eq!(smallest_singular_value(&DMatrix::zeros(2, 3)).unwrap(), 0.0);
        assert_eq!(numeric_rank(&DMatrix::zeros(2, 3), DEFAULT_RANK_TOL).unwrap(), 0);
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((smallest_singular_value(&i).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(numeric_rank(&i, DEFAULT_RANK_TOL).unwrap(), 3);
        let d = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 4.0, 0.0]);
        assert!((smallest_singular_value(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!(singular_values(&DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn binary_r_from_zero_covariances() {
        let src = lagged(&[(-1, 0.0), (0, 0.0), (1, 0.0), (2, 0.0)], &[(0, 1.0), (1, 0.0), (2, 0.0)]);
        let r = build_binary_r(&src, 2).unwrap();
        assert!(r.rows.iter().all(|row| row[0] == 0.0 && row[1] == 0.0));
        assert_eq!(r.rows[0][2], 1.0);
        assert_eq!(r.rows[1][3], 1.0);
        assert_eq!(numeric_rank(&r.to_matrix(), DEFAULT_RANK_TOL).unwrap(), 2);
        let bad = lagged(&[(-1, 0.0), (0, 1.2), (1, 0.0), (2, 0.0)], &[(0, 1.0), (1, 0.0), (2, 0.0)]);
        assert!(build_binary_r(&bad, 2).is_err());
    }

    #[test]
    fn theta_zero_is_causal_on_full_rank() {
        let src = lagged(&[(-1, 0.1), (0, 0.3), (1, 0.2), (2, 0.1)], &[(0, 1.0), (1, 0.2), (2, 0.1)]);
        let d = binary_causality_test(&src, 2, 0.0).unwrap();
        assert_eq!(d.verdict, Verdict::Causal);
        let d = binary_causality_test(&src, 2, 10.0).unwrap();
        assert_eq!(d.verdict, Verdict::NonCausal);
    }

    fn joint(entries: &[(usize, usize, f64)], d: usize) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(d, d);
        for &(i, j, v) in entries {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g
    }

    #[test]
    fn equality_when_cross_blocks_vanish() {
        // order X, Y, Z, W with one coordinate each
        let g = joint(&[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)], 4);
        let b = GaussianBlocks::new(g, 1, 1, 1, 1).unwrap();
        assert!(conditional_equality_rank(&b).unwrap());
        assert_eq!(conditional_distance_lower_bound(&b).unwrap(), 0.0);
    }

    #[test]
    fn direct_loading_on_y_breaks_equality() {
        let g = joint(&[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0), (0, 1, 0.8)], 4);
        let b = GaussianBlocks::new(g, 1, 1, 1, 1).unwrap();
        assert!(!conditional_equality_rank(&b).unwrap());
        assert!(conditional_distance_lower_bound(&b).unwrap() > 0.0);
    }

    #[test]
    fn scaling_x_keeps_phi_and_brackets_bound() {
        let g = joint(&[(0, 0, 2.0), (1, 1, 1.5), (2, 2, 1.0), (3, 3, 1.2), (0, 1, 0.8), (0, 2, 0.3), (1, 2, 0.2)], 4);
        let b = GaussianBlocks::new(g.clone(), 1, 1, 1, 1).unwrap();
        let mut g2 = g;
        for j in 0..4 {
            g2[(0, j)] *= 2.0;
            g2[(j, 0)] *= 2.0;
        }
        let b2 = GaussianBlocks::new(g2, 1, 1, 1, 1).unwrap();
        assert_eq!(conditional_distance_phi(&b), conditional_distance_phi(&b2));
        let r = conditional_distance_lower_bound(&b2).unwrap() / conditional_distance_lower_bound(&b).unwrap();
        // only the X row of the rank matrix doubles, so sigma_min grows by a
        // factor in [1, 2]
        assert!((1.0 - 1e-12..=4.0 + 1e-12).contains(&r), "{r}");
    }

    #[test]
    fn rejects_singular_yzw() {
        let g = joint(&[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (1, 2, 1.0), (3, 3, 1.0)], 4);
        assert!(matches!(GaussianBlocks::new(g, 1, 1, 1, 1), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn lagged_map_roundtrip_keys() {
        let m: BTreeMap<i64, f64> = [(-1, 0.5)].into_iter().collect();
        let s = serde_json::to_string(&m).unwrap();
        let back: BTreeMap<i64, f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
