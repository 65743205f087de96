//! The bootstrap particle filter, its estimators and replicate orchestration.

pub mod ensemble;
pub mod particles;
pub mod resample;
pub mod test_fn;

pub use ensemble::{
    cross_section, ensemble_moments, replicate_ensemble, replicate_ensemble_with, run_filter,
    run_replicate_observed, Estimator, ReplicateRecord, RunOptions,
};
pub use particles::{
    bootstrap_step, estimate, init_particles, init_particles_in, log_likelihood_estimate,
    EstimateMode, ParticleSystem,
};
pub use resample::{multinomial_ancestors, ResamplingScheme};
pub use test_fn::TestFunction;
