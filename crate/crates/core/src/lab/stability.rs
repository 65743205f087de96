//! Long-horizon behaviour of the replicate variance of the scaled predictor error.

use serde::Serialize;

use super::reference::{ExactReference, ReferenceKind};
use super::stats::{chi_squared_envelope, mean, trend_test_with, TrendTest};
use crate::error::{Error, Result};
use crate::hmm::{stationary_observation_stream, ObservationSource, ObservationValue, StateCoordinates};
use crate::smc::{cross_section, replicate_ensemble_with, Estimator, RunOptions, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityThresholds {
    /// Two-sided confidence of the slope interval.
    pub trend_confidence: f64,
    /// Bound on `max(second half) / median(first half)`.
    pub max_half_ratio: f64,
    /// Level of the chi-square envelope around the exact variance.
    pub envelope_level: f64,
    /// Required fraction of times where the exact variance is inside the envelope.
    pub envelope_coverage: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        StabilityThresholds {
            trend_confidence: 0.95,
            max_half_ratio: 3.0,
            envelope_level: 0.99,
            envelope_coverage: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityConfig {
    pub particles: usize,
    pub replicates: usize,
    pub n_max: usize,
    pub h: TestFunction,
    pub base_seed: u64,
    pub thresholds: StabilityThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n_max: usize,
    pub particles: usize,
    pub replicates: usize,
    pub h_label: String,
    pub reference: ReferenceKind,
    /// Replicate variance of `sqrt(N) (pi^N_k h - ref_k)`, `k = 0..=n_max`.
    #[serde(skip)]
    pub empirical_variance: Vec<f64>,
    /// Exact asymptotic variance per time, for finite models.
    #[serde(skip)]
    pub exact_sigma2: Option<Vec<f64>>,
    /// Whether the exact variance lies in the chi-square envelope of each entry.
    #[serde(skip)]
    pub inside_envelope: Option<Vec<bool>>,
    pub envelope_coverage: Option<f64>,
    pub trend: TrendTest,
    pub thresholds: StabilityThresholds,
    pub tightness_pass: bool,
    pub envelope_pass: Option<bool>,
    pub pass: bool,
}

/// Run the experiment on observations drawn from `source`.
pub fn variance_sequence_experiment<M>(
    model: &M,
    source: &ObservationSource<M>,
    config: &StabilityConfig,
) -> Result<StabilityReport>
where
    M: ExactReference,
    M::State: StateCoordinates<M::Scalar>,
    M::Obs: ObservationValue,
{
    let y = stationary_observation_stream(source, config.n_max)?;
    variance_sequence_on(model, &y, config)
}

/// Run the experiment on a fixed record `y_{0:n_max-1}`.
pub fn variance_sequence_on<M>(model: &M, y: &[M::Obs], config: &StabilityConfig) -> Result<StabilityReport>
where
    M: ExactReference,
    M::State: StateCoordinates<M::Scalar>,
{
    if config.n_max == 0 || y.len() < config.n_max {
        return Err(Error::InvalidArgument(format!(
            "need n_max >= 1 observations, got n_max = {} and {} observations",
            config.n_max,
            y.len()
        )));
    }
    if config.replicates < 2 {
        return Err(Error::InvalidArgument("a variance needs at least 2 replicates".into()));
    }
    let y = &y[..config.n_max];
    let exact = model.predictor_reference(y, &config.h)?;
    let exact_sigma2 = model.predictor_variances(y, &config.h)?;
    let records = replicate_ensemble_with(
        model,
        y,
        RunOptions::new(config.particles),
        config.replicates,
        config.base_seed,
        std::slice::from_ref(&config.h),
    )?;
    let estimates = cross_section(&records, 0, Estimator::Predictor);
    drop(records);
    let root_n = (config.particles as f64).sqrt();
    let (reference, dof, empirical_variance): (ReferenceKind, usize, Vec<f64>) = match &exact {
        Some((kind, refs)) => {
            let v = estimates
                .iter()
                .zip(refs)
                .map(|(xs, r)| mean(&xs.iter().map(|x| (root_n * (x - r)).powi(2)).collect::<Vec<_>>()))
                .collect();
            (*kind, config.replicates, v)
        }
        None => {
            let v = estimates
                .iter()
                .map(|xs| {
                    let m = mean(xs);
                    xs.iter().map(|x| (root_n * (x - m)).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
                })
                .collect();
            (ReferenceKind::CrossReplicateMean, config.replicates - 1, v)
        }
    };
    let t = &config.thresholds;
    let trend = trend_test_with(&empirical_variance, t.trend_confidence, t.max_half_ratio)?;
    let inside_envelope: Option<Vec<bool>> = exact_sigma2.as_ref().map(|s2| {
        s2.iter()
            .zip(&empirical_variance)
            .map(|(&s, &v)| {
                let (lo, hi) = chi_squared_envelope(s, dof, t.envelope_level);
                lo <= v && v <= hi
            })
            .collect()
    });
    let envelope_coverage = inside_envelope
        .as_ref()
        .map(|b| b.iter().filter(|&&x| x).count() as f64 / b.len() as f64);
    let envelope_pass = envelope_coverage.map(|c| c >= t.envelope_coverage);
    let tightness_pass = trend.pass;
    Ok(StabilityReport {
        n_max: config.n_max,
        particles: config.particles,
        replicates: config.replicates,
        h_label: config.h.label(),
        reference,
        empirical_variance,
        exact_sigma2,
        inside_envelope,
        envelope_coverage,
        trend,
        thresholds: *t,
        tightness_pass,
        envelope_pass,
        pass: tightness_pass && envelope_pass.unwrap_or(true),
    })
}
