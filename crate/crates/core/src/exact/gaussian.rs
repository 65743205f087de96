//! Brute-force Gaussian conditioning, independent of the Kalman recursion.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hmm::LinearGaussianModel;
use crate::scalar::prelude::*;

/// Largest joint dimension `d_x + n d_y` the oracle will build.
pub const MAX_JOINT_DIM: usize = 200;

/// Law of `X_k` given `Y_0..Y_{n-1} = y`, by writing every variable as a linear
/// function of `(X_0, U_0.., V_0..)` and conditioning the joint Gaussian directly.
pub fn gaussian_brute_force_posterior<T: Scalar>(
    model: &LinearGaussianModel<T>,
    y: &[DVector<T>],
    k: usize,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let (dx, du, dy) = (model.state_dim(), model.noise_dim(), model.obs_dim());
    let n = y.len();
    if dx + n * dy > MAX_JOINT_DIM {
        return Err(Error::InvalidArgument(format!(
            "joint dimension {} exceeds the brute-force cap of {MAX_JOINT_DIM}",
            dx + n * dy
        )));
    }
    let steps = k.max(n);
    // base vector w = (X_0, U_0..U_{steps-1}, V_0..V_{n-1})
    let u_off = dx;
    let v_off = dx + steps * du;
    let dw = v_off + n * dy;
    let mut w_mean = DVector::zeros(dw);
    w_mean.rows_mut(0, dx).copy_from(model.init_mean());
    let mut w_cov = DMatrix::identity(dw, dw);
    w_cov.view_mut((0, 0), (dx, dx)).copy_from(model.init_cov());

    // coefficient rows of X_j, then of Y_j
    let mut x_map = DMatrix::zeros(dx, dw);
    x_map.view_mut((0, 0), (dx, dx)).fill_with_identity();
    let mut joint = DMatrix::zeros(dx + n * dy, dw);
    for j in 0..=steps {
        if j == k {
            joint.view_mut((0, 0), (dx, dw)).copy_from(&x_map);
        }
        if j < n {
            let mut y_map = model.b() * &x_map;
            let mut noise = y_map.view_mut((0, v_off + j * dy), (dy, dy));
            noise += model.s();
            joint.view_mut((dx + j * dy, 0), (dy, dw)).copy_from(&y_map);
        }
        if j < steps {
            let mut next = model.a() * &x_map;
            let mut noise = next.view_mut((0, u_off + j * du), (dx, du));
            noise += model.r();
            x_map = next;
        }
    }
    let mean = &joint * &w_mean;
    let cov = &joint * &w_cov * joint.transpose();
    let prior_mean = mean.rows(0, dx).into_owned();
    let prior_cov = cov.view((0, 0), (dx, dx)).into_owned();
    if n == 0 {
        return Ok((prior_mean, prior_cov));
    }
    let obs_mean = mean.rows(dx, n * dy);
    let c_yy = cov.view((dx, dx), (n * dy, n * dy)).into_owned();
    let c_yx = cov.view((dx, 0), (n * dy, dx)).into_owned();
    let chol = Cholesky::new(c_yy)
        .ok_or_else(|| Error::Rank("joint observation covariance is singular".into()))?;
    let mut stacked = DVector::zeros(n * dy);
    for (j, obs) in y.iter().enumerate() {
        if obs.len() != dy {
            return Err(Error::Dimension(format!(
                "observation {j} has dimension {}, expected {dy}",
                obs.len()
            )));
        }
        stacked.rows_mut(j * dy, dy).copy_from(obs);
    }
    let solved = chol.solve(&c_yx);
    let post_mean = prior_mean + solved.transpose() * (stacked - obs_mean);
    let post_cov = prior_cov - c_yx.transpose() * &solved;
    let post_cov = (&post_cov + post_cov.transpose()) * T::of(0.5);
    Ok((post_mean, post_cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn independent_observations_leave_the_prior() {
        let m = LinearGaussianModel::scalar(0.9, 1.0, 0.0, 1.0, 0.5, 2.0).unwrap();
        let (mean, cov) = gaussian_brute_force_posterior(&m, &[v(3.0), v(1.0)], 1).unwrap();
        assert!((mean[0] - 0.45).abs() < 1e-14);
        assert!((cov[(0, 0)] - (0.81 * 2.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn one_step_conjugate_precision() {
        let (b, s, p0) = (1.0, 1.0, 2.0);
        let m = LinearGaussianModel::scalar(0.9, 1.0, b, s, 0.0, p0).unwrap();
        let (_, cov) = gaussian_brute_force_posterior(&m, &[v(0.4)], 0).unwrap();
        let precision = 1.0 / p0 + b * b / (s * s);
        assert!((1.0 / cov[(0, 0)] - precision).abs() < 1e-12);
    }

    #[test]
    fn refuses_oversized_problems() {
        let m = LinearGaussianModel::scalar(0.9, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let y: Vec<_> = (0..200).map(|_| v(0.0)).collect();
        assert!(gaussian_brute_force_posterior(&m, &y, 3).is_err());
    }
}
