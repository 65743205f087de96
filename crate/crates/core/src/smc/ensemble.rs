//! Single runs and replicate ensembles of the bootstrap filter.

use rayon::prelude::*;

use super::particles::{init_particles_in, EstimateMode, ParticleSystem};
use super::resample::ResamplingScheme;
use super::test_fn::TestFunction;
use crate::error::{Error, Result};
use crate::hmm::{StateCoordinates, StateSpaceModel};
use crate::io::seed::{Purpose, SeedStream, SeedTags};
use crate::scalar::prelude::*;

/// Output of one filter run over `n` observations.
///
/// `predictor[f][k]` estimates the predictor of test function `f` at `k = 0..=n`,
/// `filter[f][k]` the filter at `k = 0..n`, and `log_likelihood[k]` the log
/// likelihood of `y_{0:k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord<T> {
    pub replicate_id: usize,
    pub seed: u64,
    pub labels: Vec<String>,
    pub predictor: Vec<Vec<T>>,
    pub filter: Vec<Vec<T>>,
    pub log_likelihood: Vec<T>,
}

impl<T> ReplicateRecord<T> {
    pub fn horizon(&self) -> usize {
        self.log_likelihood.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub particles: usize,
    pub scheme: ResamplingScheme,
}

impl RunOptions {
    pub fn new(particles: usize) -> Self {
        RunOptions {
            particles,
            scheme: ResamplingScheme::Multinomial,
        }
    }
}

/// Run replicate `replicate` of the filter, calling `observe` after each weighting.
pub fn run_replicate_observed<M, F>(
    model: &M,
    observations: &[M::Obs],
    options: RunOptions,
    stream: &SeedStream,
    replicate: usize,
    test_functions: &[TestFunction],
    mut observe: F,
) -> Result<ReplicateRecord<M::Scalar>>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
    F: FnMut(&ParticleSystem<M::State, M::Scalar>),
{
    let n = observations.len();
    let mut ps = init_particles_in(model, options.particles, stream, replicate as u64)?;
    let mut predictor: Vec<Vec<M::Scalar>> = vec![Vec::with_capacity(n + 1); test_functions.len()];
    let mut filter: Vec<Vec<M::Scalar>> = vec![Vec::with_capacity(n); test_functions.len()];
    let mut log_likelihood = Vec::with_capacity(n);
    let record_predictor = |ps: &ParticleSystem<M::State, M::Scalar>, out: &mut Vec<Vec<M::Scalar>>| -> Result<()> {
        for (f, series) in test_functions.iter().zip(out.iter_mut()) {
            series.push(ps.estimate(|x| f.eval(x), EstimateMode::Predictor)?);
        }
        Ok(())
    };
    record_predictor(&ps, &mut predictor)?;
    for (k, y) in observations.iter().enumerate() {
        ps.weight(model, y)?;
        observe(&ps);
        for (f, series) in test_functions.iter().zip(filter.iter_mut()) {
            series.push(ps.estimate(|x| f.eval(x), EstimateMode::Filter)?);
        }
        log_likelihood.push(ps.log_likelihood_estimate());
        let mut rng = stream.derive(SeedTags::new(Purpose::Step, replicate as u64, k as u64));
        ps.resample_move(model, options.scheme, &mut rng)?;
        record_predictor(&ps, &mut predictor)?;
    }
    Ok(ReplicateRecord {
        replicate_id: replicate,
        seed: stream.base_seed,
        labels: test_functions.iter().map(TestFunction::label).collect(),
        predictor,
        filter,
        log_likelihood,
    })
}

pub fn run_filter<M>(
    model: &M,
    observations: &[M::Obs],
    n_particles: usize,
    seed: u64,
    test_functions: &[TestFunction],
) -> Result<ReplicateRecord<M::Scalar>>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
{
    run_replicate_observed(
        model,
        observations,
        RunOptions::new(n_particles),
        &SeedStream::new(seed),
        0,
        test_functions,
        |_| {},
    )
}

/// `m` independent runs; replicate `r` draws only from streams tagged `(base_seed, r, .)`.
///
/// Replicates run in parallel; the result is ordered by replicate id and does
/// not depend on scheduling. The first failing replicate (lowest id) is reported.
pub fn replicate_ensemble_with<M>(
    model: &M,
    observations: &[M::Obs],
    options: RunOptions,
    m: usize,
    base_seed: u64,
    test_functions: &[TestFunction],
) -> Result<Vec<ReplicateRecord<M::Scalar>>>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
{
    if m == 0 {
        return Err(Error::InvalidArgument("replicate count M must be >= 1".into()));
    }
    let stream = SeedStream::new(base_seed);
    let results: Vec<Result<ReplicateRecord<M::Scalar>>> = (0..m)
        .into_par_iter()
        .map(|r| run_replicate_observed(model, observations, options, &stream, r, test_functions, |_| {}))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(r, res)| {
            res.map_err(|e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn replicate_ensemble<M>(
    model: &M,
    observations: &[M::Obs],
    n_particles: usize,
    m: usize,
    base_seed: u64,
    test_functions: &[TestFunction],
) -> Result<Vec<ReplicateRecord<M::Scalar>>>
where
    M: StateSpaceModel,
    M::State: StateCoordinates<M::Scalar>,
{
    replicate_ensemble_with(model, observations, RunOptions::new(n_particles), m, base_seed, test_functions)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Predictor,
    Filter,
    LogLikelihood,
}

impl Estimator {
    pub fn tag(&self) -> &'static str {
        match self {
            Estimator::Predictor => "pred",
            Estimator::Filter => "filt",
            Estimator::LogLikelihood => "loglik",
        }
    }
}

fn series<T>(r: &ReplicateRecord<T>, f: usize, which: Estimator) -> &[T] {
    match which {
        Estimator::Predictor => &r.predictor[f],
        Estimator::Filter => &r.filter[f],
        Estimator::LogLikelihood => &r.log_likelihood,
    }
}

/// Per-time values of one estimator across replicates, in replicate-id order:
/// `out[k][r]`.
pub fn cross_section<T: Scalar>(records: &[ReplicateRecord<T>], f: usize, which: Estimator) -> Vec<Vec<f64>> {
    let mut order: Vec<&ReplicateRecord<T>> = records.iter().collect();
    order.sort_by_key(|r| r.replicate_id);
    let len = order.first().map_or(0, |r| series(r, f, which).len());
    (0..len)
        .map(|k| order.iter().map(|r| series(r, f, which)[k].to_f64_lossy()).collect())
        .collect()
}

/// Per-time mean and unbiased variance across replicates; independent of record order.
pub fn ensemble_moments<T: Scalar>(records: &[ReplicateRecord<T>], f: usize, which: Estimator) -> Vec<(f64, f64)> {
    cross_section(records, f, which)
        .into_iter()
        .map(|xs| {
            let m = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / m;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            (mean, var)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::DiscreteHmm;

    fn model() -> DiscreteHmm<f64> {
        DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[0.5, 0.5],
        )
        .unwrap()
    }

    const FNS: [TestFunction; 2] = [TestFunction::Indicator(0), TestFunction::Constant(1.0)];

    #[test]
    fn empty_horizon_holds_initial_estimates_only() {
        let r = run_filter(&model(), &[], 100, 1, &FNS).unwrap();
        assert_eq!(r.predictor[0].len(), 1);
        assert!(r.filter[0].is_empty() && r.log_likelihood.is_empty());
    }

    #[test]
    fn runs_are_reproducible() {
        let y = [0, 1, 1, 0, 1, 0, 0];
        let a = run_filter(&model(), &y, 300, 8, &FNS).unwrap();
        let b = run_filter(&model(), &y, 300, 8, &FNS).unwrap();
        assert_eq!(a, b);
        let c = run_filter(&model(), &y, 300, 9, &FNS).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn filter_estimates_replay_from_snapshots() {
        let y = [0, 1, 1, 0, 1];
        let mut snaps = Vec::new();
        let rec = run_replicate_observed(
            &model(),
            &y,
            RunOptions::new(200),
            &SeedStream::new(3),
            0,
            &FNS,
            |ps| snaps.push(ps.clone()),
        )
        .unwrap();
        for (k, ps) in snaps.iter().enumerate() {
            let v = ps.estimate(|x| FNS[0].eval(x), EstimateMode::Filter).unwrap();
            assert_eq!(v, rec.filter[0][k]);
            assert_eq!(ps.log_likelihood_estimate(), rec.log_likelihood[k]);
        }
    }

    #[test]
    fn singleton_ensemble_equals_run_filter() {
        let y = [1, 1, 0];
        let e = replicate_ensemble(&model(), &y, 100, 1, 21, &FNS).unwrap();
        assert_eq!(e[0], run_filter(&model(), &y, 100, 21, &FNS).unwrap());
    }

    #[test]
    fn aggregation_ignores_record_order() {
        let y = [1, 1, 0, 0];
        let mut e = replicate_ensemble(&model(), &y, 50, 40, 2, &FNS).unwrap();
        let before = ensemble_moments(&e, 0, Estimator::Predictor);
        e.reverse();
        e.swap(3, 17);
        assert_eq!(before, ensemble_moments(&e, 0, Estimator::Predictor));
    }

    #[test]
    fn failing_replicate_is_identified() {
        let m = DiscreteHmm::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 0.0],
        )
        .unwrap();
        let err = replicate_ensemble(&m, &[0, 0, 1], 10, 4, 0, &FNS).unwrap_err();
        match err {
            Error::Replicate { replicate, .. } => assert_eq!(replicate, 0),
            other => panic!("unexpected {other}"),
        }
        assert_eq!(replicate_ensemble(&m, &[0, 0, 1], 10, 4, 0, &FNS).unwrap_err().time_index(), Some(2));
    }
}
