use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hmm::DiscreteHmm;
use crate::scalar::prelude::*;

/// Exact predictor/filter flow of a finite model along one observation record.
///
/// For observations `y_0..y_{n-1}`: `predictors[k]` is the law of `X_k` given
/// `y_{0:k-1}` (so `predictors[0]` is the initial law and there are `n + 1`
/// entries), `filters[k]` the law of `X_k` given `y_{0:k}`, and `step_densities[k]`
/// the one-step observation predictor `l_k = sum_x predictors[k](x) g(x, y_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFilterTrace<T: Scalar> {
    pub predictors: Vec<DVector<T>>,
    pub filters: Vec<DVector<T>>,
    pub step_densities: Vec<T>,
    pub log_likelihood: T,
}

impl<T: Scalar> DiscreteFilterTrace<T> {
    pub fn horizon(&self) -> usize {
        self.step_densities.len()
    }

    /// `ln` of the likelihood of `y_{0:k-1}` for `k = 0..=n`.
    pub fn cumulative_log_likelihood(&self) -> Vec<T> {
        let mut acc = T::zero();
        std::iter::once(T::zero())
            .chain(self.step_densities.iter().map(|l| {
                acc += l.ln();
                acc
            }))
            .collect()
    }
}

/// Correction by `g(., y_k)` followed by prediction through `q`, renormalising every step.
pub fn forward_filter_discrete<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
) -> Result<DiscreteFilterTrace<T>> {
    let qt = model.transition().transpose();
    let mut predictors = Vec::with_capacity(y.len() + 1);
    let mut filters = Vec::with_capacity(y.len());
    let mut step_densities = Vec::with_capacity(y.len());
    let mut log_likelihood = T::zero();
    let mut pred = model.initial().clone();
    for (k, &obs) in y.iter().enumerate() {
        let g = model.likelihood_column(obs)?;
        let weighted = pred.component_mul(&g);
        let l = weighted.sum();
        if !(l > T::zero()) || !l.is_finite_value() {
            return Err(Error::LikelihoodDegenerate { time: k });
        }
        let filt = weighted / l;
        let mut next = &qt * &filt;
        let s = next.sum();
        next /= s;
        log_likelihood += l.ln();
        step_densities.push(l);
        filters.push(filt);
        predictors.push(std::mem::replace(&mut pred, next));
    }
    predictors.push(pred);
    Ok(DiscreteFilterTrace {
        predictors,
        filters,
        step_densities,
        log_likelihood,
    })
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
    fn single_state() {
        let m = DiscreteHmm::from_rows(&[vec![1.0]], &[vec![0.25, 0.75]], &[1.0]).unwrap();
        let t = forward_filter_discrete(&m, &[0, 1, 1]).unwrap();
        assert!(t.predictors.iter().all(|p| p[0] == 1.0));
        assert_eq!(t.step_densities, vec![0.25, 0.75, 0.75]);
    }

    #[test]
    fn uninformative_observations_follow_the_chain() {
        let m = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &[1.0, 0.0],
        )
        .unwrap();
        let t = forward_filter_discrete(&m, &[0, 1, 0, 0]).unwrap();
        let mut law = m.initial().clone();
        for k in 0..4 {
            assert!((&t.filters[k] - &t.predictors[k]).amax() < 1e-15);
            assert!((&t.predictors[k] - &law).amax() < 1e-15);
            law = m.transition().transpose() * law;
        }
    }

    #[test]
    fn log_likelihood_is_sum_of_logs() {
        let t = forward_filter_discrete(&fixture(), &[0, 1, 0, 0, 1]).unwrap();
        let s: f64 = t.step_densities.iter().map(|l| l.ln()).sum();
        assert!((s - t.log_likelihood).abs() < 1e-12);
        assert_eq!(*t.cumulative_log_likelihood().last().unwrap(), t.log_likelihood);
    }

    #[test]
    fn degenerate_likelihood_reports_time() {
        let m = DiscreteHmm::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 0.0],
        )
        .unwrap();
        let e = forward_filter_discrete(&m, &[0, 0, 1]).unwrap_err();
        assert_eq!(e.time_index(), Some(2));
    }

    #[test]
    fn symbol_outside_alphabet() {
        assert!(forward_filter_discrete(&fixture(), &[0, 2]).is_err());
    }
}
