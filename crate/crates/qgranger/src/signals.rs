//! Stationary Gaussian state-space generators and their exact second-order
//! statistics.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `s_{k+1} = A s_k + v_k`, `v_k ~ N(0, Q)`; `x_k` and `z_k` are two
/// coordinates of `s_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub transition: DMatrix<f64>,
    pub noise_cov: DMatrix<f64>,
    pub x_index: usize,
    pub z_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPair {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl SeriesPair {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

impl VarModel {
    pub fn new(transition: DMatrix<f64>, noise_cov: DMatrix<f64>, x_index: usize, z_index: usize) -> Result<Self> {
        let m = VarModel { transition, noise_cov, x_index, z_index };
        m.validate()?;
        Ok(m)
    }

    /// Same as [`VarModel::new`] from row-major `dim x dim` slices.
    pub fn from_row_major(dim: usize, transition: &[f64], noise_cov: &[f64], x_index: usize, z_index: usize) -> Result<Self> {
        if transition.len() != dim * dim || noise_cov.len() != dim * dim {
            return Err(Error::InvalidArgument(format!("expected {} entries per matrix", dim * dim)));
        }
        Self::new(
            DMatrix::from_row_slice(dim, dim, transition),
            DMatrix::from_row_slice(dim, dim, noise_cov),
            x_index,
            z_index,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.transition)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.transition.nrows();
        if n == 0 || self.transition.ncols() != n {
            return Err(Error::InvalidArgument("transition must be a non-empty square matrix".into()));
        }
        if self.noise_cov.shape() != (n, n) {
            return Err(Error::InvalidArgument("noise covariance must match the state dimension".into()));
        }
        if self.x_index >= n || self.z_index >= n || self.x_index == self.z_index {
            return Err(Error::InvalidArgument(format!(
                "x_index {} and z_index {} must be distinct and below {n}",
                self.x_index, self.z_index
            )));
        }
        let asym = (&self.noise_cov - self.noise_cov.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::InvalidArgument(format!("noise covariance is not symmetric (max gap {asym:e})")));
        }
        let lmin = SymmetricEigen::new(self.noise_cov.clone()).eigenvalues.min();
        if lmin < -1e-10 {
            return Err(Error::InvalidArgument(format!("noise covariance is not PSD (min eigenvalue {lmin:e})")));
        }
        let r = self.spectral_radius();
        if r >= 1.0 {
            return Err(Error::NonStationary(r));
        }
        Ok(())
    }

    /// Symmetric square root `V diag(sqrt(max(l, 0))) V^T` of the noise covariance;
    /// works for singular `Q`.
    fn noise_factor(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.noise_cov.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    }
}

/// Largest eigenvalue modulus. Falls back to Gelfand's formula
/// `||A^k||^(1/k)` by repeated squaring when the Schur iteration stalls
/// (it can on exactly nilpotent or zero matrices).
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
        return schur.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    let mut b = a.clone();
    let mut log_r = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let nb = b.norm();
        if nb == 0.0 {
            return 0.0;
        }
        b /= nb;
        log_r += nb.ln() / k;
        b = &b * &b;
        k *= 2.0;
    }
    (log_r + b.norm().ln() / k).exp()
}

/// The coupled AR(2) example
///
/// ```text
/// x_k = 0.95 sqrt(2) x_{k-1} - 0.9025 x_{k-2} - 0.9 z_{k-1} + 0.5 e1_k + 0.5 e_k
/// z_k = c x_{k-1} - 1.05 z_{k-1} - 0.85 z_{k-2} + 0.5 e2_k + 0.5 e_k
/// ```
///
/// with `c = -0.8` when `causal` and `0` otherwise, embedded in the state
/// `[x_k, x_{k-1}, z_k, z_{k-1}]`.
pub fn paper_example_model(causal: bool) -> VarModel {
    let c = if causal { -0.8 } else { 0.0 };
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.95 * 2f64.sqrt(), -0.9025, -0.9, 0.0,
        1.0, 0.0, 0.0, 0.0,
        c, 0.0, -1.05, -0.85,
        0.0, 0.0, 1.0, 0.0,
    ]);
    let mut q = DMatrix::zeros(4, 4);
    q[(0, 0)] = 0.5;
    q[(2, 2)] = 0.5;
    q[(0, 2)] = 0.25;
    q[(2, 0)] = 0.25;
    VarModel::new(a, q, 0, 2).expect("example model is stationary")
}

/// Draw `n` samples after discarding `burn_in`, starting from the zero state.
/// The same seed always gives the same output.
pub fn simulate_var(model: &VarModel, n: usize, burn_in: usize, seed: u64) -> Result<SeriesPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    model.validate()?;
    let dim = model.state_dim();
    let l = model.noise_factor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DVector::<f64>::zeros(dim);
    let mut e = DVector::<f64>::zeros(dim);
    let mut next = DVector::<f64>::zeros(dim);
    let mut out = SeriesPair { x: Vec::with_capacity(n), z: Vec::with_capacity(n) };
    for k in 0..burn_in + n {
        for v in e.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        next.gemv(1.0, &model.transition, &s, 0.0);
        next.gemv(1.0, &l, &e, 1.0);
        std::mem::swap(&mut s, &mut next);
        if k >= burn_in {
            out.x.push(s[model.x_index]);
            out.z.push(s[model.z_index]);
        }
    }
    Ok(out)
}

/// Exact lagged covariances of a stationary model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueMoments {
    pub max_lag: usize,
    /// `Cov(x_t, z_{t+k})` for `k = -L..=L`, stored at index `k + L`.
    pub gamma_xz: Vec<f64>,
    /// `Cov(z_t, z_{t+k})` for `k = 0..=L`.
    pub gamma_zz: Vec<f64>,
    /// `Cov(x_t, x_{t+k})` for `k = 0..=L`.
    pub gamma_xx: Vec<f64>,
}

impl TrueMoments {
    pub fn xz(&self, k: i64) -> Option<f64> {
        let idx = k + self.max_lag as i64;
        (k.unsigned_abs() as usize <= self.max_lag).then(|| self.gamma_xz[idx as usize])
    }

    pub fn zz(&self, k: i64) -> Option<f64> {
        self.gamma_zz.get(k.unsigned_abs() as usize).copied()
    }

    pub fn xx(&self, k: i64) -> Option<f64> {
        self.gamma_xx.get(k.unsigned_abs() as usize).copied()
    }

    pub fn sigma_x(&self) -> f64 {
        self.gamma_xx[0].sqrt()
    }

    pub fn sigma_z(&self) -> f64 {
        self.gamma_zz[0].sqrt()
    }

    pub fn rho_xz(&self, k: i64) -> Option<f64> {
        self.xz(k).map(|g| g / (self.sigma_x() * self.sigma_z()))
    }

    pub fn rho_zz(&self, k: i64) -> Option<f64> {
        self.zz(k).map(|g| g / self.gamma_zz[0])
    }
}

/// Solve `P = A P A^T + Q`.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n <= 8 {
        // column-major vec: vec(A P A^T) = (A kron A) vec(P)
        let k = a.kronecker(a);
        let lhs = DMatrix::<f64>::identity(n * n, n * n) - k;
        let rhs = DVector::from_column_slice(q.as_slice());
        let sol = lhs.lu().solve(&rhs).ok_or(Error::LyapunovDiverged(f64::INFINITY))?;
        let p = DMatrix::from_column_slice(n, n, sol.as_slice());
        return Ok((&p + p.transpose()) * 0.5);
    }
    let mut p = q.clone();
    for _ in 0..1_000_000 {
        let next = a * &p * a.transpose() + q;
        let diff = (&next - &p).norm();
        p = next;
        if diff <= 1e-14 * p.norm().max(1.0) {
            return Ok((&p + p.transpose()) * 0.5);
        }
    }
    let resid = (&p - a * &p * a.transpose() - q).norm();
    Err(Error::LyapunovDiverged(resid))
}

/// `Gamma(k) = A^k P` for `k = 0..=L`, the lag-`k` state covariance
/// `E[s_{t+k} s_t^T]`.
pub fn lagged_state_covariances(model: &VarModel, max_lag: usize) -> Result<Vec<DMatrix<f64>>> {
    model.validate()?;
    let p = lyapunov(&model.transition, &model.noise_cov)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(p);
    for k in 1..=max_lag {
        let g = &model.transition * &out[k - 1];
        out.push(g);
    }
    Ok(out)
}

pub fn stationary_covariances(model: &VarModel, max_lag: usize) -> Result<TrueMoments> {
    let g = lagged_state_covariances(model, max_lag)?;
    let (xi, zi) = (model.x_index, model.z_index);
    let l = max_lag as i64;
    let gamma_xz = (-l..=l)
        .map(|k| if k >= 0 { g[k as usize][(zi, xi)] } else { g[(-k) as usize][(xi, zi)] })
        .collect();
    Ok(TrueMoments {
        max_lag,
        gamma_xz,
        gamma_zz: g.iter().map(|m| m[(zi, zi)]).collect(),
        gamma_xx: g.iter().map(|m| m[(xi, xi)]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_closed_form() {
        let m = VarModel::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            0,
            1,
        )
        .unwrap();
        let t = stationary_covariances(&m, 3).unwrap();
        assert!((t.xx(0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((t.xx(1).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((t.zz(0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radius_of_zero_and_nilpotent() {
        assert_eq!(spectral_radius(&DMatrix::zeros(3, 3)), 0.0);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius(&n) < 1e-6);
        let d = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.7]);
        assert!((spectral_radius(&d) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn white_noise() {
        let m = VarModel::new(DMatrix::zeros(3, 3), DMatrix::identity(3, 3), 0, 2).unwrap();
        let t = stationary_covariances(&m, 4).unwrap();
        assert_eq!(t.zz(0), Some(1.0));
        for k in 1..=4 {
            assert_eq!(t.zz(k), Some(0.0));
            assert_eq!(t.xz(k), Some(0.0));
            assert_eq!(t.xz(-k), Some(0.0));
        }
    }

    #[test]
    fn rejects_invalid_models() {
        let a = DMatrix::from_row_slice(2, 2, &[1.01, 0.0, 0.0, 0.1]);
        assert!(matches!(VarModel::new(a, DMatrix::identity(2, 2), 0, 1), Err(Error::NonStationary(_))));
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.1, 1.0]);
        assert!(VarModel::new(DMatrix::zeros(2, 2), q, 0, 1).is_err());
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(VarModel::new(DMatrix::zeros(2, 2), q, 0, 1).is_err());
        assert!(VarModel::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), 1, 1).is_err());
    }

    #[test]
    fn example_coefficients_and_radius() {
        let c = paper_example_model(true);
        let n = paper_example_model(false);
        assert_eq!(c.transition[(2, 0)], -0.8);
        assert_eq!(n.transition[(2, 0)], 0.0);
        assert!((c.spectral_radius() - 0.94738).abs() < 1e-4);
        assert!((n.spectral_radius() - 0.95).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_residual_small() {
        for causal in [true, false] {
            let m = paper_example_model(causal);
            let p = lyapunov(&m.transition, &m.noise_cov).unwrap();
            let r = (&p - &m.transition * &p * m.transition.transpose() - &m.noise_cov).norm();
            assert!(r <= 1e-10 * p.norm());
        }
    }

    #[test]
    fn iterative_lyapunov_agrees() {
        // 9 states forces the fixed-point path
        let n = 9;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 0.3 + 0.05 * i as f64;
            if i + 1 < n {
                a[(i, i + 1)] = 0.1;
            }
        }
        let q = DMatrix::identity(n, n);
        let p = lyapunov(&a, &q).unwrap();
        let k = a.kronecker(&a);
        let sol = (DMatrix::<f64>::identity(n * n, n * n) - k)
            .lu()
            .solve(&DVector::from_column_slice(q.as_slice()))
            .unwrap();
        let exact = DMatrix::from_column_slice(n, n, sol.as_slice());
        assert!((p - exact).norm() < 1e-12);
    }

    #[test]
    fn time_reversal_consistency() {
        let m = paper_example_model(true);
        let g = lagged_state_covariances(&m, 5).unwrap();
        let t = stationary_covariances(&m, 5).unwrap();
        for k in 1..=5i64 {
            // Cov(x_t, z_{t-k}) = Cov(z_s, x_{s+k}) = Gamma(k)[x, z]
            assert_eq!(t.xz(-k).unwrap(), g[k as usize][(0, 2)]);
        }
    }

    #[test]
    fn example_moments() {
        let t = stationary_covariances(&paper_example_model(true), 10).unwrap();
        assert!((t.sigma_x() - 2.52673).abs() < 1e-4);
        assert!((t.sigma_z() - 2.20405).abs() < 1e-4);
        let max_cs = (-10..=10).map(|k| t.xz(k).unwrap().abs()).fold(0.0, f64::max);
        assert!(max_cs <= t.sigma_x() * t.sigma_z());
    }

    #[test]
    fn deterministic_and_burn_in() {
        let m = paper_example_model(true);
        let a = simulate_var(&m, 200, 100, 7).unwrap();
        let b = simulate_var(&m, 200, 100, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_var(&m, 200, 100, 8).unwrap();
        assert_ne!(a, c);
        // the tail of a longer burn-in run is the same stream shifted
        let long = simulate_var(&m, 100, 200, 7).unwrap();
        assert_eq!(&a.x[100..], &long.x[..]);
        assert!(simulate_var(&m, 0, 10, 1).is_err());
    }

    #[test]
    fn white_noise_lag_one_near_zero() {
        let m = VarModel::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), 0, 1).unwrap();
        let n = 100_000;
        let s = simulate_var(&m, n, 0, 3).unwrap();
        let c: f64 = s.z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n as f64;
        assert!(c.abs() < 3.0 / (n as f64).sqrt());
    }
}
