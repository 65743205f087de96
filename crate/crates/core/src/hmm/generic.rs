//! Black-box hidden Markov models given by samplers and density callables.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::StateSpaceModel;
use crate::error::Result;
use crate::scalar::prelude::*;

pub type InitialSampler<S> = Arc<dyn Fn(&mut dyn Rng) -> S + Send + Sync>;
pub type TransitionSampler<S> = Arc<dyn Fn(&S, &mut dyn Rng) -> S + Send + Sync>;
pub type ObservationSampler<S, O> = Arc<dyn Fn(&S, &mut dyn Rng) -> O + Send + Sync>;
pub type PairDensity<A, B, T> = Arc<dyn Fn(&A, &B) -> T + Send + Sync>;
pub type PointDensity<S, T> = Arc<dyn Fn(&S) -> T + Send + Sync>;

/// A hidden Markov model on an arbitrary state space.
///
/// `obs_log_density` returns `ln g(x, y)`. The optional densities are only needed
/// by the assumption checks, never by the particle filter.
#[derive(Clone)]
pub struct GenericHmm<T, S, O> {
    pub initial_sampler: InitialSampler<S>,
    pub transition_sampler: TransitionSampler<S>,
    pub observation_sampler: ObservationSampler<S, O>,
    pub obs_log_density: PairDensity<S, O, T>,
    pub transition_density: Option<PairDensity<S, S, T>>,
    pub initial_density: Option<PointDensity<S, T>>,
    pub label: String,
}

impl<T, S, O> fmt::Debug for GenericHmm<T, S, O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericHmm")
            .field("label", &self.label)
            .field("transition_density", &self.transition_density.is_some())
            .field("initial_density", &self.initial_density.is_some())
            .finish()
    }
}

fn normal<T: Scalar>(rng: &mut dyn Rng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::of(z)
}

fn normal_log_pdf<T: Scalar>(x: T, mean: T, sd: T) -> T {
    let z = (x - mean) / sd;
    -T::of(0.5) * (z * z + T::two_pi().ln()) - sd.ln()
}

/// Scalar ARCH(1) state with Gaussian measurement:
/// `X_k = a X_{k-1} + sqrt(b0 + b1 X_{k-1}^2) Z_k`, `Y_k = X_k + obs_sd V_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchParams<T> {
    pub a: T,
    pub b0: T,
    pub b1: T,
    pub obs_sd: T,
    pub init_mean: T,
    pub init_sd: T,
}

impl<T: Scalar> GenericHmm<T, T, T> {
    pub fn arch(p: ArchParams<T>) -> Self {
        let vol = move |x: T| (p.b0 + p.b1 * x * x).sqrt();
        GenericHmm {
            initial_sampler: Arc::new(move |rng| p.init_mean + p.init_sd * normal::<T>(rng)),
            transition_sampler: Arc::new(move |x, rng| p.a * *x + vol(*x) * normal::<T>(rng)),
            observation_sampler: Arc::new(move |x, rng| *x + p.obs_sd * normal::<T>(rng)),
            obs_log_density: Arc::new(move |x, y| normal_log_pdf(*y, *x, p.obs_sd)),
            transition_density: Some(Arc::new(move |x, x_next| {
                normal_log_pdf(*x_next, p.a * *x, vol(*x)).exp()
            })),
            initial_density: Some(Arc::new(move |x| normal_log_pdf(*x, p.init_mean, p.init_sd).exp())),
            label: "arch".into(),
        }
    }

    /// `X_{k+1} = X_k + step_sd Z`, `Y_k = X_k + obs_sd V`, `X_0 ~ N(0, init_sd^2)`.
    pub fn gaussian_random_walk(step_sd: T, obs_sd: T, init_sd: T) -> Self {
        GenericHmm {
            initial_sampler: Arc::new(move |rng| init_sd * normal::<T>(rng)),
            transition_sampler: Arc::new(move |x, rng| *x + step_sd * normal::<T>(rng)),
            observation_sampler: Arc::new(move |x, rng| *x + obs_sd * normal::<T>(rng)),
            obs_log_density: Arc::new(move |x, y| normal_log_pdf(*y, *x, obs_sd)),
            transition_density: Some(Arc::new(move |x, x_next| {
                normal_log_pdf(*x_next, *x, step_sd).exp()
            })),
            initial_density: Some(Arc::new(move |x| normal_log_pdf(*x, T::zero(), init_sd).exp())),
            label: "random-walk".into(),
        }
    }
}

impl<T, S, O> StateSpaceModel for GenericHmm<T, S, O>
where
    T: Scalar,
    S: Clone + fmt::Debug + Send + Sync,
    O: Clone + fmt::Debug + Send + Sync,
{
    type Scalar = T;
    type State = S;
    type Obs = O;

    fn validate(&self) -> Result<()> {
        Ok(())
    }

    fn sample_initial<R: Rng>(&self, rng: &mut R) -> S {
        (self.initial_sampler)(rng)
    }

    fn sample_transition<R: Rng>(&self, x: &S, rng: &mut R) -> S {
        (self.transition_sampler)(x, rng)
    }

    fn sample_observation<R: Rng>(&self, x: &S, rng: &mut R) -> O {
        (self.observation_sampler)(x, rng)
    }

    fn log_obs_density(&self, x: &S, y: &O) -> T {
        (self.obs_log_density)(x, y)
    }
}
