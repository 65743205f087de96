//! Exact asymptotic variances of the bootstrap particle predictor and filter on
//! finite models.
//!
//! For observations `y_{0:n-1}` the predictor variance is
//!
//! ```text
//! sigma^2 = sum_{k=0}^{n} pi_k[ ((L_{k:n-1} h - pi_n h * L_{k:n-1} 1) / (pi_k L_{k:n-1} 1))^2 ]
//! ```
//!
//! with `pi_k` the exact predictor and `L_{k:n-1}` the identity when `k = n`. The
//! filter variance at `y_{0:n}` is `sigma^2(g_n (h - phi_n h)) / (pi_n g_n)^2`.
//! Each summand only involves the ratio of `L h` and `L 1`, so both are rescaled
//! by a common factor at every backward step and never underflow.

use nalgebra::DVector;

use super::forward::{forward_filter_discrete, DiscreteFilterTrace};
use crate::error::{Error, Result};
use crate::hmm::DiscreteHmm;
use crate::scalar::prelude::*;

/// Asymptotic variances along a record, indexed by time.
///
/// `sigma2[n]` belongs to the predictor after `y_{0:n-1}` (so `sigma2[0]` is the
/// variance of `h` under the initial law); `sigma2_filter[n]` to the filter after `y_{0:n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceSeries<T: Scalar> {
    pub sigma2: Vec<T>,
    pub sigma2_filter: Vec<T>,
    pub h_label: String,
}

fn check_h<T: Scalar>(model: &DiscreteHmm<T>, h: &DVector<T>) -> Result<()> {
    if h.len() != model.states() {
        return Err(Error::Dimension(format!(
            "test function has {} entries, model has {} states",
            h.len(),
            model.states()
        )));
    }
    Ok(())
}

fn columns<T: Scalar>(model: &DiscreteHmm<T>, y: &[usize]) -> Result<Vec<DVector<T>>> {
    y.iter().map(|&v| model.likelihood_column(v)).collect()
}

/// Predictor variance for the first `n` observations, given the exact trace over at least `n`.
fn predictor_variance_at<T: Scalar>(
    model: &DiscreteHmm<T>,
    trace: &DiscreteFilterTrace<T>,
    cols: &[DVector<T>],
    n: usize,
    h: &DVector<T>,
) -> Result<T> {
    let pred_h = trace.predictors[n].dot(h);
    let mut lh = h.clone();
    let mut l1 = DVector::from_element(model.states(), T::one());
    let mut total = T::zero();
    for k in (0..=n).rev() {
        if k < n {
            let g = &cols[k];
            lh = (model.transition() * &lh).component_mul(g);
            l1 = (model.transition() * &l1).component_mul(g);
            let scale = l1.max();
            if !(scale > T::zero()) {
                return Err(Error::LikelihoodDegenerate { time: k });
            }
            lh /= scale;
            l1 /= scale;
        }
        let pi = &trace.predictors[k];
        let denom = pi.dot(&l1);
        if !(denom > T::zero()) {
            return Err(Error::LikelihoodDegenerate { time: k });
        }
        let term = pi
            .iter()
            .zip(lh.iter().zip(l1.iter()))
            .map(|(&p, (&a, &b))| {
                let c = (a - pred_h * b) / denom;
                p * c * c
            })
            .fold(T::zero(), |acc, v| acc + v);
        total += term;
    }
    Ok(total)
}

fn filter_variance_at<T: Scalar>(
    model: &DiscreteHmm<T>,
    trace: &DiscreteFilterTrace<T>,
    cols: &[DVector<T>],
    n: usize,
    h: &DVector<T>,
) -> Result<T> {
    let filt_h = trace.filters[n].dot(h);
    let centered = h.map(|v| v - filt_h).component_mul(&cols[n]);
    let sigma2 = predictor_variance_at(model, trace, cols, n, &centered)?;
    let l = trace.step_densities[n];
    Ok(sigma2 / (l * l))
}

/// `sigma^2<y_{0:n-1}>(h)` with `n = y.len()`.
pub fn exact_asymptotic_variance_discrete<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
    h: &DVector<T>,
) -> Result<T> {
    check_h(model, h)?;
    let trace = forward_filter_discrete(model, y)?;
    predictor_variance_at(model, &trace, &columns(model, y)?, y.len(), h)
}

/// `sigma~^2<y_{0:n}>(h)` with `n = y.len() - 1`.
pub fn exact_filter_variance_discrete<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
    h: &DVector<T>,
) -> Result<T> {
    check_h(model, h)?;
    if y.is_empty() {
        return Err(Error::InvalidArgument(
            "filter variance needs at least one observation".into(),
        ));
    }
    let trace = forward_filter_discrete(model, y)?;
    filter_variance_at(model, &trace, &columns(model, y)?, y.len() - 1, h)
}

/// Both variance sequences for every prefix of `y`, from one forward pass.
pub fn variance_series<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
    h: &DVector<T>,
    h_label: impl Into<String>,
) -> Result<VarianceSeries<T>> {
    check_h(model, h)?;
    let trace = forward_filter_discrete(model, y)?;
    let cols = columns(model, y)?;
    let sigma2 = (0..=y.len())
        .map(|n| predictor_variance_at(model, &trace, &cols, n, h))
        .collect::<Result<Vec<_>>>()?;
    let sigma2_filter = (0..y.len())
        .map(|n| filter_variance_at(model, &trace, &cols, n, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceSeries {
        sigma2,
        sigma2_filter,
        h_label: h_label.into(),
    })
}

/// Only the predictor variances `sigma2[0..=y.len()]`; quadratic in the record length.
pub fn predictor_variance_series<T: Scalar>(model: &DiscreteHmm<T>, y: &[usize], h: &DVector<T>) -> Result<Vec<T>> {
    check_h(model, h)?;
    let trace = forward_filter_discrete(model, y)?;
    let cols = columns(model, y)?;
    (0..=y.len())
        .map(|n| predictor_variance_at(model, &trace, &cols, n, h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> DiscreteHmm<f64> {
        DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn constant_function_has_zero_variance() {
        let h = DVector::from_element(2, 3.0);
        let s = variance_series(&fixture(), &[0, 1, 1, 0, 1], &h, "c").unwrap();
        assert!(s.sigma2.iter().all(|v| v.abs() < 1e-24));
        assert!(s.sigma2_filter.iter().all(|v| v.abs() < 1e-24));
    }

    #[test]
    fn empty_record_gives_initial_variance() {
        let h = DVector::from_vec(vec![1.0, 0.0]);
        let v = exact_asymptotic_variance_discrete(&fixture(), &[], &h).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn first_filter_variance_is_importance_sampling_variance() {
        // chi[(g / chi g)^2 (h - phi h)^2] with chi = (1/2, 1/2), g = (0.8, 0.3), h = e_0
        let h = DVector::from_vec(vec![1.0, 0.0]);
        let v = exact_filter_variance_discrete(&fixture(), &[0], &h).unwrap();
        let (g0, g1) = (0.8, 0.3);
        let chig = 0.5 * g0 + 0.5 * g1;
        let phi = 0.5 * g0 / chig;
        let expected = 0.5 * (g0 / chig).powi(2) * (1.0 - phi).powi(2)
            + 0.5 * (g1 / chig).powi(2) * phi.powi(2);
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn series_agrees_with_single_evaluations() {
        let y = [0, 1, 0, 0, 1, 1];
        let h = DVector::from_vec(vec![1.0, 0.0]);
        let s = variance_series(&fixture(), &y, &h, "ind0").unwrap();
        for n in 0..=y.len() {
            let v = exact_asymptotic_variance_discrete(&fixture(), &y[..n], &h).unwrap();
            assert!((v - s.sigma2[n]).abs() < 1e-14);
        }
        for n in 0..y.len() {
            let v = exact_filter_variance_discrete(&fixture(), &y[..=n], &h).unwrap();
            assert!((v - s.sigma2_filter[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn long_records_do_not_underflow() {
        let y: Vec<usize> = (0..3000).map(|k| (k * 7 % 3 == 0) as usize).collect();
        let h = DVector::from_vec(vec![1.0, 0.0]);
        let v = exact_asymptotic_variance_discrete(&fixture(), &y, &h).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
