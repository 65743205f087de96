//! Structure matrices of a linear Gaussian model and its block likelihood.
//!
//! For a block of `n` observations started at `x_0`:
//!
//! ```text
//! O_n = [B; B A; ...; B A^{n-1}]          C_n = [A^{n-1} R, ..., A R, R]
//! D_n = block lower triangular, (i, j) = B A^{i-1-j} R for i > j, zero diagonal
//! S_n = blockdiag(S, ..., S)              F_n = D_n D_n^T + S_n S_n^T
//! G_n = [D_n; C_n][D_n; C_n]^T + [S_n; 0][S_n; 0]^T
//! ```
//!
//! so that `y_{0:n-1} ~ N(O_n x_0, F_n)` and `(y_{0:n-1}, x_n) ~ N([O_n; A^n] x_0, G_n)`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::linear_gaussian::min_eigenvalue;
use crate::hmm::LinearGaussianModel;
use crate::scalar::prelude::*;

/// Numerical rank: singular values above `max(rows, cols) * eps * sigma_max`.
pub fn numerical_rank<T: Scalar>(m: &DMatrix<T>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if !(top > T::zero()) {
        return 0;
    }
    let tol = T::of_usize(m.nrows().max(m.ncols())) * <T as Scalar>::epsilon() * top;
    sv.iter().filter(|&&s| s > tol).count()
}

fn is_positive_definite<T: Scalar>(m: &DMatrix<T>) -> (bool, T) {
    let lo = min_eigenvalue(m);
    let hi = m.iter().fold(T::zero(), |a, b| a.max(b.absolute())) * T::of_usize(m.nrows());
    let tol = T::of_usize(m.nrows()) * <T as Scalar>::epsilon() * hi;
    (lo > tol, lo)
}

fn powers<T: Scalar>(a: &DMatrix<T>, n: usize) -> Vec<DMatrix<T>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(DMatrix::identity(a.nrows(), a.ncols()));
    for k in 1..=n {
        let next = a * &out[k - 1];
        out.push(next);
    }
    out
}

pub fn observability_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let (dx, dy) = (model.state_dim(), model.obs_dim());
    let p = powers(model.a(), n);
    let mut o = DMatrix::zeros(n * dy, dx);
    for k in 0..n {
        o.view_mut((k * dy, 0), (dy, dx)).copy_from(&(model.b() * &p[k]));
    }
    o
}

pub fn controllability_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let (dx, du) = (model.state_dim(), model.noise_dim());
    let p = powers(model.a(), n);
    let mut c = DMatrix::zeros(dx, n * du);
    for k in 0..n {
        c.view_mut((0, k * du), (dx, du)).copy_from(&(&p[n - 1 - k] * model.r()));
    }
    c
}

/// `D_n`: response of `y_{0:n-1}` to the state noise `U_0..U_{n-1}`.
pub fn noise_response_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let (dy, du) = (model.obs_dim(), model.noise_dim());
    let p = powers(model.a(), n);
    let mut d = DMatrix::zeros(n * dy, n * du);
    for i in 1..n {
        for j in 0..i {
            d.view_mut((i * dy, j * du), (dy, du))
                .copy_from(&(model.b() * &p[i - 1 - j] * model.r()));
        }
    }
    d
}

pub fn block_noise_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let dy = model.obs_dim();
    let mut s = DMatrix::zeros(n * dy, n * dy);
    for k in 0..n {
        s.view_mut((k * dy, k * dy), (dy, dy)).copy_from(model.s());
    }
    s
}

pub fn f_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let d = noise_response_matrix(model, n);
    let s = block_noise_matrix(model, n);
    &d * d.transpose() + &s * s.transpose()
}

pub fn g_matrix<T: Scalar>(model: &LinearGaussianModel<T>, n: usize) -> DMatrix<T> {
    let (dx, dy) = (model.state_dim(), model.obs_dim());
    let d = noise_response_matrix(model, n);
    let c = controllability_matrix(model, n);
    let s = block_noise_matrix(model, n);
    let mut dc = DMatrix::zeros(n * dy + dx, d.ncols());
    dc.view_mut((0, 0), (n * dy, d.ncols())).copy_from(&d);
    dc.view_mut((n * dy, 0), (dx, d.ncols())).copy_from(&c);
    let mut s0 = DMatrix::zeros(n * dy + dx, n * dy);
    s0.view_mut((0, 0), (n * dy, n * dy)).copy_from(&s);
    &dc * dc.transpose() + &s0 * s0.transpose()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LgssStructure<T: Scalar> {
    pub r_max: usize,
    /// Ranks of `O_n` and `C_n` for `n = 1..=r_max`.
    pub obs_ranks: Vec<usize>,
    pub ctrl_ranks: Vec<usize>,
    /// Smallest `r` with `rank O_r = rank C_r = d_x`.
    pub r_star: Option<usize>,
    /// The structure matrices at `r_star`, or at `r_max` when there is none.
    #[serde(skip)]
    pub obs_matrix: DMatrix<T>,
    #[serde(skip)]
    pub ctrl_matrix: DMatrix<T>,
    #[serde(skip)]
    pub f_matrix: DMatrix<T>,
    #[serde(skip)]
    pub g_matrix: DMatrix<T>,
    /// Smallest eigenvalue of `F_n`, `n = 1..=r_max`.
    pub f_min_eigenvalues: Vec<f64>,
    /// `F_n` positive definite for every `n` in `r_star..=r_max`.
    pub f_positive_definite: bool,
    pub obs_noise_full_rank: bool,
}

impl<T: Scalar> LgssStructure<T> {
    pub fn pass(&self) -> bool {
        self.r_star.is_some() && self.f_positive_definite && self.obs_noise_full_rank
    }
}

pub fn lgss_structure<T: Scalar>(model: &LinearGaussianModel<T>, r_max: usize) -> Result<LgssStructure<T>> {
    if r_max == 0 {
        return Err(Error::InvalidArgument("r_max must be >= 1".into()));
    }
    let dx = model.state_dim();
    let mut obs_ranks = Vec::with_capacity(r_max);
    let mut ctrl_ranks = Vec::with_capacity(r_max);
    let mut f_min_eigenvalues = Vec::with_capacity(r_max);
    let mut f_pd = Vec::with_capacity(r_max);
    for n in 1..=r_max {
        obs_ranks.push(numerical_rank(&observability_matrix(model, n)));
        ctrl_ranks.push(numerical_rank(&controllability_matrix(model, n)));
        let (pd, lo) = is_positive_definite(&f_matrix(model, n));
        f_min_eigenvalues.push(lo.to_f64_lossy());
        f_pd.push(pd);
    }
    let r_star = (0..r_max)
        .find(|&i| obs_ranks[i] == dx && ctrl_ranks[i] == dx)
        .map(|i| i + 1);
    let r = r_star.unwrap_or(r_max);
    Ok(LgssStructure {
        r_max,
        obs_ranks,
        ctrl_ranks,
        r_star,
        obs_matrix: observability_matrix(model, r),
        ctrl_matrix: controllability_matrix(model, r),
        f_matrix: f_matrix(model, r),
        g_matrix: g_matrix(model, r),
        f_positive_definite: r_star.is_some() && f_pd[r - 1..].iter().all(|&b| b),
        f_min_eigenvalues,
        obs_noise_full_rank: model.obs_noise_full_rank(),
    })
}

fn stack<T: Scalar>(y: &[DVector<T>], dy: usize) -> Result<DVector<T>> {
    let mut v = DVector::zeros(y.len() * dy);
    for (k, yk) in y.iter().enumerate() {
        if yk.len() != dy {
            return Err(Error::Dimension(format!(
                "observation {k} has dimension {}, expected {dy}",
                yk.len()
            )));
        }
        v.rows_mut(k * dy, dy).copy_from(yk);
    }
    Ok(v)
}

/// `ln N(residual; 0, cov)` via a Cholesky factor; a non-definite `cov` is a rank error.
fn gaussian_log_density_chol<T: Scalar>(residual: &DVector<T>, cov: DMatrix<T>, what: &str) -> Result<T> {
    let dim = residual.len();
    let chol = Cholesky::new(cov).ok_or_else(|| Error::Rank(format!("{what} is not positive definite")))?;
    let log_det = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(T::zero(), |acc, d| acc + d.ln())
        * T::of(2.0);
    let z = chol.l().solve_lower_triangular(residual).expect("nonsingular factor");
    Ok(-T::of(0.5) * (T::of_usize(dim) * T::two_pi().ln() + log_det + z.dot(&z)))
}

/// `ln` of the density of `y_{0:n-1}` given `X_0 = x0`: a Gaussian with mean
/// `O_n x0` and covariance `F_n`, normalised by `(2 pi)^{-n d_y / 2}`.
pub fn lgss_block_log_likelihood<T: Scalar>(
    model: &LinearGaussianModel<T>,
    x0: &DVector<T>,
    y: &[DVector<T>],
) -> Result<T> {
    if x0.len() != model.state_dim() {
        return Err(Error::Dimension(format!(
            "x0 has dimension {}, expected {}",
            x0.len(),
            model.state_dim()
        )));
    }
    let n = y.len();
    if n == 0 {
        return Ok(T::zero());
    }
    let stacked = stack(y, model.obs_dim())?;
    let residual = stacked - observability_matrix(model, n) * x0;
    gaussian_log_density_chol(&residual, f_matrix(model, n), "F_n")
}

pub fn lgss_block_likelihood<T: Scalar>(
    model: &LinearGaussianModel<T>,
    x0: &DVector<T>,
    y: &[DVector<T>],
) -> Result<T> {
    Ok(lgss_block_log_likelihood(model, x0, y)?.exp())
}

/// Density in `x_r` of the unnormalised kernel `delta_{x0} L<y_{0:r-1}>`: the
/// Gaussian density of `(y_{0:r-1}, x_r)` with mean `[O_r; A^r] x0` and covariance `G_r`.
pub fn lgss_block_density<T: Scalar>(
    model: &LinearGaussianModel<T>,
    y: &[DVector<T>],
    x0: &DVector<T>,
    xr: &DVector<T>,
) -> Result<T> {
    let (dx, dy, r) = (model.state_dim(), model.obs_dim(), y.len());
    if x0.len() != dx || xr.len() != dx {
        return Err(Error::Dimension(format!("states must have dimension {dx}")));
    }
    let mut v = DVector::zeros(r * dy + dx);
    v.rows_mut(0, r * dy).copy_from(&stack(y, dy)?);
    v.rows_mut(r * dy, dx).copy_from(xr);
    let mut m = DMatrix::zeros(r * dy + dx, dx);
    m.view_mut((0, 0), (r * dy, dx)).copy_from(&observability_matrix(model, r));
    m.view_mut((r * dy, 0), (dx, dx)).copy_from(&powers(model.a(), r)[r]);
    let residual = v - m * x0;
    Ok(gaussian_log_density_chol(&residual, g_matrix(model, r), "G_r")?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn model(a: DMatrix<f64>, r: DMatrix<f64>, b: DMatrix<f64>, s: DMatrix<f64>) -> LinearGaussianModel<f64> {
        let dx = a.nrows();
        LinearGaussianModel::new(a, r, b, s, DVector::zeros(dx), DMatrix::identity(dx, dx)).unwrap()
    }

    #[test]
    fn identity_observation_gives_r_star_one() {
        let m = model(mat(2, 2, &[0.5, 0.1, 0.0, 0.3]), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        let s = lgss_structure(&m, 4).unwrap();
        assert_eq!(s.r_star, Some(1));
        assert!(s.pass());
    }

    #[test]
    fn double_integrator_needs_two_steps() {
        let m = model(mat(2, 2, &[1.0, 1.0, 0.0, 1.0]), DMatrix::identity(2, 2), mat(1, 2, &[1.0, 0.0]), mat(1, 1, &[1.0]));
        let o2 = observability_matrix(&m, 2);
        assert_eq!(o2, mat(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let s = lgss_structure(&m, 3).unwrap();
        assert_eq!(s.obs_ranks, vec![1, 2, 2]);
        assert_eq!(s.r_star, Some(2));
    }

    #[test]
    fn zero_dynamics_have_no_r_star() {
        let m = model(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(1, 2), mat(1, 1, &[1.0]));
        let s = lgss_structure(&m, 5).unwrap();
        assert_eq!(s.r_star, None);
        assert!(!s.pass());
    }

    #[test]
    fn noise_response_layout() {
        let m = model(mat(1, 1, &[0.5]), mat(1, 1, &[2.0]), mat(1, 1, &[3.0]), mat(1, 1, &[1.0]));
        // (i, j) = B A^{i-1-j} R below the diagonal
        let d = noise_response_matrix(&m, 3);
        assert_eq!(d, mat(3, 3, &[0.0, 0.0, 0.0, 6.0, 0.0, 0.0, 3.0, 6.0, 0.0]));
        let f = f_matrix(&m, 3);
        assert!((&f - f.transpose()).amax() < 1e-14);
    }

    #[test]
    fn single_observation_is_a_normal_density() {
        let m = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let x0 = DVector::from_element(1, 0.4);
        let y = [DVector::from_element(1, 1.4)];
        let v = lgss_block_likelihood(&m, &x0, &y).unwrap();
        let expected = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn scaling_noise_scales_peak_by_determinant() {
        let y: Vec<DVector<f64>> = (0..3).map(|_| DVector::from_element(1, 0.0)).collect();
        let x0 = DVector::from_element(1, 0.0);
        let base = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let wide = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 10.0, 0.0, 1.0).unwrap();
        let ratio = lgss_block_likelihood(&wide, &x0, &y).unwrap() / lgss_block_likelihood(&base, &x0, &y).unwrap();
        let det_ratio = f_matrix(&wide, 3).determinant() / f_matrix(&base, 3).determinant();
        assert!((ratio - det_ratio.powf(-0.5)).abs() < 1e-12 * ratio);
    }
}
