use std::fmt::Debug;

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::seed::{Purpose, SeedStream, SeedTags};
use crate::scalar::prelude::*;

/// A hidden Markov model that can be simulated and weighted.
///
/// `log_obs_density` is `ln g(x, y)` with respect to the model's reference
/// measure on the observation space (counting measure for finite alphabets,
/// Lebesgue otherwise).
pub trait StateSpaceModel: Send + Sync {
    type Scalar: Scalar;
    type State: Clone + Debug + Send + Sync;
    type Obs: Clone + Debug + Send + Sync;

    fn validate(&self) -> Result<()>;

    /// Reject an observation outside the observation space (wrong symbol or dimension).
    fn validate_observation(&self, _y: &Self::Obs) -> Result<()> {
        Ok(())
    }

    fn sample_initial<R: Rng>(&self, rng: &mut R) -> Self::State;

    fn sample_transition<R: Rng>(&self, x: &Self::State, rng: &mut R) -> Self::State;

    fn sample_observation<R: Rng>(&self, x: &Self::State, rng: &mut R) -> Self::Obs;

    fn log_obs_density(&self, x: &Self::State, y: &Self::Obs) -> Self::Scalar;

    fn obs_density(&self, x: &Self::State, y: &Self::Obs) -> Self::Scalar {
        self.log_obs_density(x, y).exp()
    }
}

/// `g(x, y)`, rejecting values that break strict positivity.
pub fn local_likelihood<M: StateSpaceModel>(
    model: &M,
    x: &M::State,
    y: &M::Obs,
) -> Result<M::Scalar> {
    let v = model.obs_density(x, y);
    if !v.is_finite_value() || v <= M::Scalar::zero() {
        return Err(Error::ModelViolation(format!(
            "g(x, y) = {v} at x = {x:?}, y = {y:?}; the local likelihood must be positive and finite"
        )));
    }
    Ok(v)
}

/// States `X_0..X_{n-1}` and observations `Y_0..Y_{n-1}` of one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, O> {
    pub states: Vec<S>,
    pub observations: Vec<O>,
    pub seed: u64,
}

impl<S, O> Trajectory<S, O> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Draw `X_0 ~ chi`, `X_{k+1} ~ Q(X_k, .)`, `Y_k ~ G(X_k, .)` for `k < n`.
pub fn simulate_hmm<M: StateSpaceModel>(
    model: &M,
    n: usize,
    seed: u64,
) -> Result<Trajectory<M::State, M::Obs>> {
    model.validate()?;
    let mut rng = SeedStream::new(seed).derive(SeedTags::new(Purpose::Simulate, 0, 0));
    let mut states = Vec::with_capacity(n);
    let mut observations = Vec::with_capacity(n);
    if n > 0 {
        let mut x = model.sample_initial(&mut rng);
        for k in 0..n {
            observations.push(model.sample_observation(&x, &mut rng));
            if k + 1 < n {
                let next = model.sample_transition(&x, &mut rng);
                states.push(std::mem::replace(&mut x, next));
            } else {
                states.push(x.clone());
            }
        }
    }
    Ok(Trajectory {
        states,
        observations,
        seed,
    })
}
