//! The bootstrap particle filter.
//!
//! One step at time `n`, given particles `xi_n^i` targeting the predictor:
//! weight `w^i = g(xi_n^i, y_n)`, draw ancestors `I^i ~ (w / W)` and mutate
//! `xi_{n+1}^i ~ Q(xi_n^{I^i}, .)`. Resampling happens at every step.
//!
//! Weights are computed from log-densities shifted by their maximum, so the
//! stored weights are `g / exp(shift)`; the running log normalising constant adds
//! `shift + ln(W / N)` at each step.

use rand::Rng;

use super::resample::{resample, ResamplingScheme};
use crate::error::{Error, Result};
use crate::hmm::StateSpaceModel;
use crate::io::seed::{Purpose, SeedStream, SeedTags};
use crate::scalar::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    /// `N^-1 sum h(xi^i)`.
    Predictor,
    /// `sum (w^i / W) h(xi^i)`.
    Filter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem<S, T> {
    particles: Vec<S>,
    weights: Vec<T>,
    weight_sum: T,
    log_weight_shift: T,
    time: usize,
    log_norm_const: T,
    ancestors: Vec<usize>,
}

impl<S: Clone, T: Scalar> ParticleSystem<S, T> {
    /// Wrap an explicit sample as the predictor approximation at `time`.
    pub fn from_particles(particles: Vec<S>, time: usize) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidArgument("a particle system needs N >= 1".into()));
        }
        Ok(ParticleSystem {
            particles,
            weights: Vec::new(),
            weight_sum: T::zero(),
            log_weight_shift: T::zero(),
            time,
            log_norm_const: T::zero(),
            ancestors: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    /// Index `n` of the predictor the particles currently target.
    pub fn time(&self) -> usize {
        self.time
    }

    pub fn is_weighted(&self) -> bool {
        !self.weights.is_empty()
    }

    /// Shifted weights `w^i exp(-shift)`, empty before [`weight`](Self::weight).
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `W = sum_i w^i` on the natural scale.
    pub fn weight_sum(&self) -> T {
        self.weight_sum * self.log_weight_shift.exp()
    }

    pub fn ancestors(&self) -> &[usize] {
        &self.ancestors
    }

    pub fn log_likelihood_estimate(&self) -> T {
        self.log_norm_const
    }

    /// Compute the weights for observation `y_n` and accumulate `ln(W / N)`.
    pub fn weight<M>(&mut self, model: &M, y: &M::Obs) -> Result<()>
    where
        M: StateSpaceModel<State = S, Scalar = T>,
    {
        if self.is_weighted() {
            return Err(Error::InvalidArgument(format!(
                "particles at time {} are already weighted",
                self.time
            )));
        }
        let mut logw: Vec<T> = self.particles.iter().map(|x| model.log_obs_density(x, y)).collect();
        let mut shift = T::neg_infinity();
        for &lw in &logw {
            if lw.is_nan_value() || (!lw.is_finite_value() && lw > T::zero()) {
                return Err(Error::ModelViolation(format!(
                    "ln g = {lw} at time {}; the local likelihood must be finite",
                    self.time
                )));
            }
            if lw > shift {
                shift = lw;
            }
        }
        if !shift.is_finite_value() {
            return Err(Error::WeightDegeneracy {
                time: self.time,
                particles: self.len(),
            });
        }
        let mut sum = T::zero();
        for lw in logw.iter_mut() {
            *lw = (*lw - shift).exp();
            sum += *lw;
        }
        self.weights = logw;
        self.weight_sum = sum;
        self.log_weight_shift = shift;
        self.log_norm_const += shift + (sum / T::of_usize(self.len())).ln();
        Ok(())
    }

    /// Select ancestors from the current weights and propagate them through `Q`.
    pub fn resample_move<M, R>(&mut self, model: &M, scheme: ResamplingScheme, rng: &mut R) -> Result<()>
    where
        M: StateSpaceModel<State = S, Scalar = T>,
        R: Rng,
    {
        if !self.is_weighted() {
            return Err(Error::InvalidArgument(format!(
                "particles at time {} must be weighted before resampling",
                self.time
            )));
        }
        let n = self.len();
        let mut ancestors = std::mem::take(&mut self.ancestors);
        resample(scheme, &self.weights, self.weight_sum, n, rng, &mut ancestors);
        self.particles = ancestors
            .iter()
            .map(|&a| model.sample_transition(&self.particles[a], rng))
            .collect();
        self.ancestors = ancestors;
        self.weights.clear();
        self.weight_sum = T::zero();
        self.log_weight_shift = T::zero();
        self.time += 1;
        Ok(())
    }

    pub fn estimate(&self, h: impl Fn(&S) -> T, mode: EstimateMode) -> Result<T> {
        match mode {
            EstimateMode::Predictor => {
                let s = self.particles.iter().fold(T::zero(), |acc, x| acc + h(x));
                Ok(s / T::of_usize(self.len()))
            }
            EstimateMode::Filter => {
                if !self.is_weighted() {
                    return Err(Error::InvalidArgument(format!(
                        "filter estimate at time {} needs weights for the current observation",
                        self.time
                    )));
                }
                if !(self.weight_sum > T::zero()) {
                    return Err(Error::WeightDegeneracy {
                        time: self.time,
                        particles: self.len(),
                    });
                }
                let s = self
                    .particles
                    .iter()
                    .zip(&self.weights)
                    .fold(T::zero(), |acc, (x, &w)| acc + w * h(x));
                Ok(s / self.weight_sum)
            }
        }
    }
}

/// `N` i.i.d. draws from the initial law, from the stream `(seed, replicate, 0, Init)`.
pub fn init_particles_in<M: StateSpaceModel>(
    model: &M,
    n: usize,
    stream: &SeedStream,
    replicate: u64,
) -> Result<ParticleSystem<M::State, M::Scalar>> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle count N must be >= 1".into()));
    }
    let mut rng = stream.derive(SeedTags::new(Purpose::Init, replicate, 0));
    let particles = (0..n).map(|_| model.sample_initial(&mut rng)).collect();
    ParticleSystem::from_particles(particles, 0)
}

pub fn init_particles<M: StateSpaceModel>(
    model: &M,
    n: usize,
    seed: u64,
) -> Result<ParticleSystem<M::State, M::Scalar>> {
    init_particles_in(model, n, &SeedStream::new(seed), 0)
}

/// Weight by `y_n`, resample multinomially and mutate.
pub fn bootstrap_step<M: StateSpaceModel, R: Rng>(
    mut ps: ParticleSystem<M::State, M::Scalar>,
    model: &M,
    y: &M::Obs,
    rng: &mut R,
) -> Result<ParticleSystem<M::State, M::Scalar>> {
    ps.weight(model, y)?;
    ps.resample_move(model, ResamplingScheme::Multinomial, rng)?;
    Ok(ps)
}

pub fn estimate<S: Clone, T: Scalar>(
    ps: &ParticleSystem<S, T>,
    h: impl Fn(&S) -> T,
    mode: EstimateMode,
) -> Result<T> {
    ps.estimate(h, mode)
}

pub fn log_likelihood_estimate<S: Clone, T: Scalar>(ps: &ParticleSystem<S, T>) -> T {
    ps.log_likelihood_estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::DiscreteHmm;

    fn model(initial: &[f64]) -> DiscreteHmm<f64> {
        DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            initial,
        )
        .unwrap()
    }

    fn step_rng(t: u64) -> crate::io::seed::PfRng {
        SeedStream::new(9).derive(SeedTags::new(Purpose::Step, 0, t))
    }

    #[test]
    fn point_mass_initial_law() {
        let ps = init_particles(&model(&[1.0, 0.0]), 500, 1).unwrap();
        assert!(ps.particles().iter().all(|&x| x == 0));
    }

    #[test]
    fn initialisation_is_deterministic_and_rejects_empty() {
        let m = model(&[0.5, 0.5]);
        assert_eq!(init_particles(&m, 100, 4).unwrap(), init_particles(&m, 100, 4).unwrap());
        assert!(init_particles(&m, 0, 4).is_err());
    }

    #[test]
    fn initial_fraction_within_binomial_error() {
        let n = 100_000;
        let ps = init_particles(&model(&[0.5, 0.5]), n, 2).unwrap();
        let frac = ps.particles().iter().filter(|&&x| x == 0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn constant_function_estimates_to_one_exactly() {
        let m = model(&[0.5, 0.5]);
        let mut ps = init_particles(&m, 777, 3).unwrap();
        ps.weight(&m, &1).unwrap();
        assert_eq!(ps.estimate(|_| 1.0, EstimateMode::Predictor).unwrap(), 1.0);
        assert_eq!(ps.estimate(|_| 1.0, EstimateMode::Filter).unwrap(), 1.0);
    }

    #[test]
    fn filter_mode_requires_weights() {
        let m = model(&[0.5, 0.5]);
        let ps = init_particles(&m, 10, 3).unwrap();
        assert!(ps.estimate(|_| 1.0, EstimateMode::Filter).is_err());
    }

    #[test]
    fn equal_weights_make_filter_equal_predictor() {
        let m = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.4, 0.6], vec![0.4, 0.6]],
            &[0.5, 0.5],
        )
        .unwrap();
        let mut ps = init_particles(&m, 1000, 3).unwrap();
        ps.weight(&m, &0).unwrap();
        let h = |x: &usize| (*x as f64) * 2.0 - 0.3;
        let a = ps.estimate(h, EstimateMode::Predictor).unwrap();
        let b = ps.estimate(h, EstimateMode::Filter).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn constant_likelihood_gives_deterministic_normalising_constant() {
        let c = 0.37;
        let m = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![c], vec![c]],
            &[0.5, 0.5],
        )
        .unwrap();
        let mut ps = init_particles(&m, 50, 3).unwrap();
        for t in 0..6 {
            ps = bootstrap_step(ps, &m, &0, &mut step_rng(t)).unwrap();
        }
        assert!((ps.log_likelihood_estimate() - 6.0 * c.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_state_normalising_constant() {
        let m = DiscreteHmm::from_rows(&[vec![1.0]], &[vec![0.2, 0.5, 0.3]], &[1.0]).unwrap();
        let ys = [1, 0, 2, 2];
        let mut ps = init_particles(&m, 20, 3).unwrap();
        for (t, y) in ys.iter().enumerate() {
            ps = bootstrap_step(ps, &m, y, &mut step_rng(t as u64)).unwrap();
        }
        let expected: f64 = ys.iter().map(|&y| [0.2f64, 0.5, 0.3][y].ln()).sum();
        assert!((ps.log_likelihood_estimate() - expected).abs() < 1e-14);
    }

    #[test]
    fn all_zero_weights_abort_with_time() {
        let m = DiscreteHmm::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 0.0],
        )
        .unwrap();
        let mut ps = init_particles(&m, 10, 3).unwrap();
        ps = bootstrap_step(ps, &m, &0, &mut step_rng(0)).unwrap();
        let err = bootstrap_step(ps, &m, &1, &mut step_rng(1)).unwrap_err();
        assert!(matches!(err, Error::WeightDegeneracy { time: 1, particles: 10 }));
    }

    #[test]
    fn scaled_likelihood_leaves_filter_unchanged() {
        let base = model(&[0.5, 0.5]);
        let scaled = DiscreteHmm::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
            &[vec![0.8 * 7.5, 0.2 * 7.5], vec![0.3 * 7.5, 0.7 * 7.5]],
            &[0.5, 0.5],
        )
        .unwrap();
        let mut a = init_particles(&base, 1000, 5).unwrap();
        let mut b = init_particles(&scaled, 1000, 5).unwrap();
        for (t, y) in [0usize, 1, 1, 0].iter().enumerate() {
            a.weight(&base, y).unwrap();
            b.weight(&scaled, y).unwrap();
            let h = |x: &usize| (*x == 0) as u8 as f64;
            let fa = a.estimate(h, EstimateMode::Filter).unwrap();
            let fb = b.estimate(h, EstimateMode::Filter).unwrap();
            assert!((fa - fb).abs() < 1e-12);
            a.resample_move(&base, ResamplingScheme::Multinomial, &mut step_rng(t as u64)).unwrap();
            b.resample_move(&scaled, ResamplingScheme::Multinomial, &mut step_rng(t as u64)).unwrap();
        }
    }
}
