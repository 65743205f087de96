//! Bootstrap particle filtering with exact asymptotic-variance oracles.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`hmm`]: model representations (finite, linear Gaussian, black-box) and
//!   simulation of states, observations and stationary non-model streams.
//! * [`exact`]: exact filtering for finite models, the unnormalized kernels
//!   `L<y_{k:m}>`, closed-form asymptotic variances of the bootstrap filter, and
//!   the Kalman filter with a brute-force Gaussian conditioning oracle.
//! * [`smc`]: the bootstrap particle filter with multinomial resampling, its
//!   estimators, and reproducible replicate ensembles.
//! * [`lab`]: long-horizon stability experiments built on the above.
//! * [`verify`]: numerical checks of the structural conditions on concrete models.
//! * [`io`]: seeding, configuration, CSV persistence and command dispatch.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

pub mod error;
pub mod exact;
pub mod hmm;
pub mod io;
pub mod lab;
pub mod scalar;
pub mod smc;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DiscreteHmm64 = hmm::DiscreteHmm<f64>;
pub type DiscreteHmm32 = hmm::DiscreteHmm<f32>;
pub type LinearGaussianModel64 = hmm::LinearGaussianModel<f64>;
pub type LinearGaussianModel32 = hmm::LinearGaussianModel<f32>;
pub type ScalarGenericHmm64 = hmm::GenericHmm<f64, f64, f64>;
pub type DiscreteFilterTrace64 = exact::DiscreteFilterTrace<f64>;
pub type KalmanTrace64 = exact::KalmanTrace<f64>;
pub type VarianceSeries64 = exact::VarianceSeries<f64>;
