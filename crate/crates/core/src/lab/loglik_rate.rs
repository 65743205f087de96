//! Convergence of the normalised exact log-likelihood `n^-1 ln L_n`.

use serde::Serialize;

use super::reference::ExactReference;
use super::stats::sample_variance;
use crate::error::{Error, Result};
use crate::hmm::{stationary_observation_stream, ObservationSource, ObservationValue};

pub const DEFAULT_RATE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoglikRateReport {
    /// `rate[i] = ln L_{i+1} / (i + 1)`, for `n = 1..=n_max`.
    #[serde(skip)]
    pub rate: Vec<f64>,
    pub n_max: usize,
    /// Final value, the empirical limit.
    pub limit_estimate: f64,
    /// Sample standard deviation of the last quarter of `rate`.
    pub last_quartile_std: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Normalised cumulative sums of step log-densities.
pub fn rate_series(step_log_densities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    step_log_densities
        .iter()
        .enumerate()
        .map(|(i, l)| {
            acc += l;
            acc / (i + 1) as f64
        })
        .collect()
}

pub fn loglik_rate_on<M: ExactReference>(model: &M, y: &[M::Obs], tolerance: f64) -> Result<LoglikRateReport> {
    let steps = model
        .step_log_densities(y)?
        .ok_or_else(|| Error::InvalidArgument("this model has no exact likelihood".into()))?;
    if steps.is_empty() {
        return Err(Error::InvalidArgument("the rate needs n_max >= 1".into()));
    }
    let rate = rate_series(&steps);
    let tail = &rate[rate.len() * 3 / 4..];
    let last_quartile_std = if tail.len() > 1 { sample_variance(tail).sqrt() } else { 0.0 };
    Ok(LoglikRateReport {
        n_max: rate.len(),
        limit_estimate: *rate.last().unwrap(),
        last_quartile_std,
        tolerance,
        pass: last_quartile_std <= tolerance,
        rate,
    })
}

pub fn loglik_rate_experiment<M>(model: &M, source: &ObservationSource<M>, n_max: usize) -> Result<LoglikRateReport>
where
    M: ExactReference,
    M::Obs: ObservationValue,
{
    let y = stationary_observation_stream(source, n_max)?;
    loglik_rate_on(model, &y, DEFAULT_RATE_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::DiscreteHmm;

    #[test]
    fn constant_emission_gives_constant_rate() {
        let m = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.25, 0.75], vec![0.25, 0.75]],
            &[0.5, 0.5],
        )
        .unwrap();
        let y = vec![1; 40];
        let r = loglik_rate_on(&m, &y, DEFAULT_RATE_TOLERANCE).unwrap();
        assert!(r.rate.iter().all(|v| (v - 0.75f64.ln()).abs() < 1e-14));
        assert!(r.last_quartile_std < 1e-14);
    }
}
