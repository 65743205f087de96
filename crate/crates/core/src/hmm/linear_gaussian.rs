//! Linear Gaussian state-space models
//! `X_{k+1} = A X_k + R U_k`, `Y_k = B X_k + S V_k` with standard Gaussian noise.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};
use crate::scalar::prelude::*;

#[derive(Clone, Debug)]
pub struct LinearGaussianModel<T: Scalar> {
    a: DMatrix<T>,
    r: DMatrix<T>,
    b: DMatrix<T>,
    s: DMatrix<T>,
    init_mean: DVector<T>,
    init_cov: DMatrix<T>,
    init_factor: DMatrix<T>,
    obs_chol: Option<Cholesky<T, Dyn>>,
    obs_log_norm: T,
}

/// Symmetric square root `V sqrt(max(L, 0))` of a PSD matrix, also valid when singular.
pub(crate) fn psd_factor<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(m.clone());
    let mut v = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let root = if *lambda > T::zero() { lambda.sqrt() } else { T::zero() };
        v.column_mut(j).scale_mut(root);
    }
    v
}

fn is_symmetric<T: Scalar>(m: &DMatrix<T>, tol: T) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

pub(crate) fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |a, b| a.min(b))
}

fn standard_normal_vector<T: Scalar, R: Rng>(dim: usize, rng: &mut R) -> DVector<T> {
    DVector::from_fn(dim, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        T::of(z)
    })
}

impl<T: Scalar> LinearGaussianModel<T> {
    pub fn new(
        a: DMatrix<T>,
        r: DMatrix<T>,
        b: DMatrix<T>,
        s: DMatrix<T>,
        init_mean: DVector<T>,
        init_cov: DMatrix<T>,
    ) -> Result<Self> {
        let dx = a.nrows();
        let dim_err = |what: &str, got: (usize, usize), want: String| {
            Err(Error::Dimension(format!("{what} is {}x{}, expected {want}", got.0, got.1)))
        };
        if !a.is_square() {
            return dim_err("A", a.shape(), "square".into());
        }
        if r.nrows() != dx {
            return dim_err("R", r.shape(), format!("{dx} rows"));
        }
        if b.ncols() != dx {
            return dim_err("B", b.shape(), format!("{dx} columns"));
        }
        let dy = b.nrows();
        if s.shape() != (dy, dy) {
            return dim_err("S", s.shape(), format!("{dy}x{dy}"));
        }
        if init_mean.len() != dx {
            return dim_err("init_mean", (init_mean.len(), 1), format!("{dx}x1"));
        }
        if init_cov.shape() != (dx, dx) {
            return dim_err("init_cov", init_cov.shape(), format!("{dx}x{dx}"));
        }
        let tol = T::of(1e-12);
        if !is_symmetric(&init_cov, tol) {
            return Err(Error::InvalidModel("init_cov is not symmetric".into()));
        }
        let scale = init_cov.amax().max(T::one());
        if dx > 0 && min_eigenvalue(&init_cov) < -tol * scale {
            return Err(Error::InvalidModel("init_cov is not positive semidefinite".into()));
        }
        let init_factor = psd_factor(&init_cov);
        let obs_cov = &s * s.transpose();
        let obs_chol = Cholesky::new(obs_cov);
        let obs_log_norm = match &obs_chol {
            Some(c) => {
                let log_det: T = c.l_dirty().diagonal().iter().fold(T::zero(), |acc, d| acc + d.ln()) * T::of(2.0);
                -T::of(0.5) * (T::of_usize(dy) * T::two_pi().ln() + log_det)
            }
            None => T::neg_infinity(),
        };
        Ok(LinearGaussianModel {
            a,
            r,
            b,
            s,
            init_mean,
            init_cov,
            init_factor,
            obs_chol,
            obs_log_norm,
        })
    }

    /// Scalar model with `d_x = d_u = d_y = 1`.
    pub fn scalar(a: T, r: T, b: T, s: T, init_mean: T, init_var: T) -> Result<Self> {
        let m = |v| DMatrix::from_element(1, 1, v);
        Self::new(m(a), m(r), m(b), m(s), DVector::from_element(1, init_mean), m(init_var))
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn s(&self) -> &DMatrix<T> {
        &self.s
    }
    pub fn init_mean(&self) -> &DVector<T> {
        &self.init_mean
    }
    pub fn init_cov(&self) -> &DMatrix<T> {
        &self.init_cov
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn noise_dim(&self) -> usize {
        self.r.ncols()
    }
    pub fn obs_dim(&self) -> usize {
        self.b.nrows()
    }

    /// `S S^T` is invertible.
    pub fn obs_noise_full_rank(&self) -> bool {
        self.obs_chol.is_some()
    }

    /// Same dynamics started from a different Gaussian law.
    pub fn with_initial(&self, mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), self.r.clone(), self.b.clone(), self.s.clone(), mean, cov)
    }

    /// Transition density `q(x, x')`, available when `R R^T` is invertible.
    pub fn transition_log_density(&self, x: &DVector<T>, x_next: &DVector<T>) -> Option<T> {
        let cov = &self.r * self.r.transpose();
        gaussian_log_density(&(x_next - &self.a * x), &cov)
    }
}

/// `ln N(residual; 0, cov)`, or `None` when `cov` is not positive definite.
pub fn gaussian_log_density<T: Scalar>(residual: &DVector<T>, cov: &DMatrix<T>) -> Option<T> {
    let chol = Cholesky::new(cov.clone())?;
    let log_det: T = chol.l_dirty().diagonal().iter().fold(T::zero(), |acc, d| acc + d.ln()) * T::of(2.0);
    let solved = chol.solve(residual);
    let quad = residual.dot(&solved);
    Some(-T::of(0.5) * (T::of_usize(residual.len()) * T::two_pi().ln() + log_det + quad))
}

impl<T: Scalar> StateSpaceModel for LinearGaussianModel<T> {
    type Scalar = T;
    type State = DVector<T>;
    type Obs = DVector<T>;

    fn validate(&self) -> Result<()> {
        Ok(())
    }

    fn validate_observation(&self, y: &DVector<T>) -> Result<()> {
        if y.len() != self.obs_dim() {
            return Err(Error::Dimension(format!("observation has length {}, expected {}", y.len(), self.obs_dim())));
        }
        Ok(())
    }

    fn sample_initial<R: Rng>(&self, rng: &mut R) -> DVector<T> {
        let z = standard_normal_vector(self.state_dim(), rng);
        &self.init_mean + &self.init_factor * z
    }

    fn sample_transition<R: Rng>(&self, x: &DVector<T>, rng: &mut R) -> DVector<T> {
        let u = standard_normal_vector(self.noise_dim(), rng);
        &self.a * x + &self.r * u
    }

    fn sample_observation<R: Rng>(&self, x: &DVector<T>, rng: &mut R) -> DVector<T> {
        let v = standard_normal_vector(self.obs_dim(), rng);
        &self.b * x + &self.s * v
    }

    /// Gaussian `ln N(y; B x, S S^T)`; NaN when `S` is singular, since `g` then has no density.
    fn log_obs_density(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        match &self.obs_chol {
            Some(chol) => {
                let resid = y - &self.b * x;
                let solved = chol.solve(&resid);
                self.obs_log_norm - T::of(0.5) * resid.dot(&solved)
            }
            None => T::nan_value(),
        }
    }
}
