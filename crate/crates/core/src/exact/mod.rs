//! Exact filtering and exact asymptotic variances on tractable models.

pub mod forward;
pub mod gaussian;
pub mod kalman;
pub mod kernel;
pub mod variance;

pub use forward::{forward_filter_discrete, DiscreteFilterTrace};
pub use gaussian::gaussian_brute_force_posterior;
pub use kalman::{kalman_filter, KalmanTrace};
pub use kernel::unnormalized_kernel_apply_discrete;
pub use variance::{
    exact_asymptotic_variance_discrete, exact_filter_variance_discrete, predictor_variance_series,
    variance_series,
    VarianceSeries,
};
