//! Replicate check of the exact asymptotic variances at selected times.

use serde::Serialize;

use super::stats::chi_squared_envelope;
use crate::error::{Error, Result};
use crate::exact::{forward_filter_discrete, variance_series};
use crate::hmm::DiscreteHmm;
use crate::scalar::prelude::*;
use crate::smc::{cross_section, replicate_ensemble, Estimator, TestFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct CltConfig {
    pub particles: usize,
    pub replicates: usize,
    pub h: TestFunction,
    /// Times at which the predictor (after `y_{0:n-1}`) and filter (after `y_{0:n}`) are checked.
    pub times: Vec<usize>,
    pub level: f64,
    pub base_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltRow {
    pub time: usize,
    pub estimator: &'static str,
    pub exact: f64,
    /// Mean of `N (estimate - exact mean)^2` over replicates.
    pub empirical: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub particles: usize,
    pub replicates: usize,
    pub h_label: String,
    pub level: f64,
    pub rows: Vec<CltRow>,
    pub pass: bool,
}

/// Compare replicate variances of the scaled predictor and filter errors with the
/// exact values. The errors are taken about the exact means, so the replicate
/// variance has `M` degrees of freedom.
pub fn clt_variance_experiment<T: Scalar>(
    model: &DiscreteHmm<T>,
    y: &[usize],
    config: &CltConfig,
) -> Result<CltReport> {
    if let Some(&bad) = config.times.iter().find(|&&t| t >= y.len()) {
        return Err(Error::InvalidArgument(format!(
            "time {bad} needs observations up to y_{bad}, only {} given",
            y.len()
        )));
    }
    let hv = config.h.on_states::<T>(model.states());
    let exact = variance_series(model, y, &hv, config.h.label())?;
    let trace = forward_filter_discrete(model, y)?;
    let records = replicate_ensemble(
        model,
        y,
        config.particles,
        config.replicates,
        config.base_seed,
        std::slice::from_ref(&config.h),
    )?;
    let pred = cross_section(&records, 0, Estimator::Predictor);
    let filt = cross_section(&records, 0, Estimator::Filter);
    let nf = config.particles as f64;
    let mut rows = Vec::new();
    for &n in &config.times {
        let cases = [
            ("pred", &pred[n], trace.predictors[n].dot(&hv), exact.sigma2[n]),
            ("filt", &filt[n], trace.filters[n].dot(&hv), exact.sigma2_filter[n]),
        ];
        for (estimator, xs, target, s2) in cases {
            let target = target.to_f64_lossy();
            let s2 = s2.to_f64_lossy();
            let empirical = xs.iter().map(|x| nf * (x - target).powi(2)).sum::<f64>() / xs.len() as f64;
            let (lo, hi) = chi_squared_envelope(s2, config.replicates, config.level);
            rows.push(CltRow {
                time: n,
                estimator,
                exact: s2,
                empirical,
                envelope_low: lo,
                envelope_high: hi,
                inside: lo <= empirical && empirical <= hi,
            });
        }
    }
    let pass = rows.iter().all(|r| r.inside);
    Ok(CltReport {
        particles: config.particles,
        replicates: config.replicates,
        h_label: config.h.label(),
        level: config.level,
        rows,
        pass,
    })
}
