use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hmm::linear_gaussian::gaussian_log_density;
use crate::hmm::LinearGaussianModel;
use crate::scalar::prelude::*;

/// Gaussian moments of the predictor and filter flow of a linear Gaussian model.
///
/// For observations `y_0..y_{n-1}` there are `n + 1` predicted moments (the last
/// one predicts `X_n`) and `n` filtered moments and step log-densities.
#[derive(Clone, Debug)]
pub struct KalmanTrace<T: Scalar> {
    pub pred_means: Vec<DVector<T>>,
    pub pred_covs: Vec<DMatrix<T>>,
    pub filt_means: Vec<DVector<T>>,
    pub filt_covs: Vec<DMatrix<T>>,
    pub step_log_densities: Vec<T>,
}

impl<T: Scalar> KalmanTrace<T> {
    pub fn log_likelihood(&self) -> T {
        self.step_log_densities.iter().fold(T::zero(), |a, &b| a + b)
    }
}

fn symmetrize<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * T::of(0.5)
}

pub fn kalman_filter<T: Scalar>(
    model: &LinearGaussianModel<T>,
    y: &[DVector<T>],
) -> Result<KalmanTrace<T>> {
    let dx = model.state_dim();
    let (a, b) = (model.a(), model.b());
    let state_noise = model.r() * model.r().transpose();
    let obs_noise = model.s() * model.s().transpose();
    let identity = DMatrix::<T>::identity(dx, dx);

    let n = y.len();
    let mut trace = KalmanTrace {
        pred_means: Vec::with_capacity(n + 1),
        pred_covs: Vec::with_capacity(n + 1),
        filt_means: Vec::with_capacity(n),
        filt_covs: Vec::with_capacity(n),
        step_log_densities: Vec::with_capacity(n),
    };
    let mut mean = model.init_mean().clone();
    let mut cov = model.init_cov().clone();
    for (k, obs) in y.iter().enumerate() {
        if obs.len() != model.obs_dim() {
            return Err(Error::Dimension(format!(
                "observation {k} has dimension {}, expected {}",
                obs.len(),
                model.obs_dim()
            )));
        }
        let innovation = obs - b * &mean;
        let innov_cov = symmetrize(b * &cov * b.transpose() + &obs_noise);
        let chol = Cholesky::new(innov_cov.clone()).ok_or_else(|| {
            Error::Rank(format!("innovation covariance at time {k} is not positive definite"))
        })?;
        let log_density = gaussian_log_density(&innovation, &innov_cov)
            .ok_or_else(|| Error::Rank(format!("innovation covariance at time {k} is singular")))?;
        // K = P B^T (B P B^T + S S^T)^{-1}
        let gain = chol.solve(&(b * &cov)).transpose();
        let filt_mean = &mean + &gain * innovation;
        let ikb = &identity - &gain * b;
        let filt_cov = symmetrize(&ikb * &cov * ikb.transpose() + &gain * &obs_noise * gain.transpose());

        let next_mean = a * &filt_mean;
        let next_cov = symmetrize(a * &filt_cov * a.transpose() + &state_noise);
        trace.pred_means.push(std::mem::replace(&mut mean, next_mean));
        trace.pred_covs.push(std::mem::replace(&mut cov, next_cov));
        trace.filt_means.push(filt_mean);
        trace.filt_covs.push(filt_cov);
        trace.step_log_densities.push(log_density);
    }
    trace.pred_means.push(mean);
    trace.pred_covs.push(cov);
    Ok(trace)
}
