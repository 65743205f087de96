//! Exact quantities a replicate experiment can be compared against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{forward_filter_discrete, kalman_filter, predictor_variance_series};
use crate::hmm::{DiscreteHmm, GenericHmm, LinearGaussianModel, StateSpaceModel};
use crate::scalar::prelude::*;
use crate::smc::TestFunction;

/// What the per-time errors of an experiment are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Exact predictor expectation from the forward recursion.
    ExactPredictor,
    /// Kalman predictive mean.
    KalmanMean,
    /// Mean of the estimates across replicates.
    CrossReplicateMean,
}

/// Models with (some) closed-form filtering quantities. Every method returns
/// `None` when the quantity is not available for the model or test function.
pub trait ExactReference: StateSpaceModel {
    /// `pi_k h` for `k = 0..=y.len()`.
    fn predictor_reference(&self, y: &[Self::Obs], h: &TestFunction) -> Result<Option<(ReferenceKind, Vec<f64>)>>;

    /// Asymptotic predictor variances `sigma^2_k(h)` for `k = 0..=y.len()`.
    fn predictor_variances(&self, _y: &[Self::Obs], _h: &TestFunction) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }

    /// `ln l_k` for `k = 0..y.len()`.
    fn step_log_densities(&self, y: &[Self::Obs]) -> Result<Option<Vec<f64>>>;
}

fn on_states<T: Scalar>(model: &DiscreteHmm<T>, h: &TestFunction) -> Result<nalgebra::DVector<T>> {
    let v = h.on_states::<T>(model.states());
    if v.iter().any(|x| !x.is_finite_value()) {
        return Err(Error::InvalidArgument(format!(
            "test function {h} is not defined on a finite state space"
        )));
    }
    Ok(v)
}

impl<T: Scalar> ExactReference for DiscreteHmm<T> {
    fn predictor_reference(&self, y: &[usize], h: &TestFunction) -> Result<Option<(ReferenceKind, Vec<f64>)>> {
        let hv = on_states(self, h)?;
        let trace = forward_filter_discrete(self, y)?;
        let means = trace.predictors.iter().map(|p| p.dot(&hv).to_f64_lossy()).collect();
        Ok(Some((ReferenceKind::ExactPredictor, means)))
    }

    fn predictor_variances(&self, y: &[usize], h: &TestFunction) -> Result<Option<Vec<f64>>> {
        let hv = on_states(self, h)?;
        let s = predictor_variance_series(self, y, &hv)?;
        Ok(Some(s.into_iter().map(|v| v.to_f64_lossy()).collect()))
    }

    fn step_log_densities(&self, y: &[usize]) -> Result<Option<Vec<f64>>> {
        let trace = forward_filter_discrete(self, y)?;
        Ok(Some(trace.step_densities.iter().map(|l| l.to_f64_lossy().ln()).collect()))
    }
}

impl<T: Scalar> ExactReference for LinearGaussianModel<T> {
    fn predictor_reference(
        &self,
        y: &[nalgebra::DVector<T>],
        h: &TestFunction,
    ) -> Result<Option<(ReferenceKind, Vec<f64>)>> {
        let n = y.len() + 1;
        match *h {
            TestFunction::Constant(c) => Ok(Some((ReferenceKind::KalmanMean, vec![c; n]))),
            TestFunction::Coordinate(i) if i < self.state_dim() => {
                let trace = kalman_filter(self, y)?;
                let means = trace.pred_means.iter().map(|m| m[i].to_f64_lossy()).collect();
                Ok(Some((ReferenceKind::KalmanMean, means)))
            }
            _ => Ok(None),
        }
    }

    fn step_log_densities(&self, y: &[nalgebra::DVector<T>]) -> Result<Option<Vec<f64>>> {
        let trace = kalman_filter(self, y)?;
        Ok(Some(trace.step_log_densities.iter().map(|v| v.to_f64_lossy()).collect()))
    }
}

impl<T, S, O> ExactReference for GenericHmm<T, S, O>
where
    T: Scalar,
    S: Clone + std::fmt::Debug + Send + Sync,
    O: Clone + std::fmt::Debug + Send + Sync,
{
    fn predictor_reference(&self, _y: &[O], _h: &TestFunction) -> Result<Option<(ReferenceKind, Vec<f64>)>> {
        Ok(None)
    }

    fn step_log_densities(&self, _y: &[O]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}
