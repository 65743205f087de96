//! Replicate experiments on long horizons and the statistics behind them.

pub mod clt;
pub mod forgetting;
pub mod loglik_rate;
pub mod lp;
pub mod reference;
pub mod stability;
pub mod stats;

pub use clt::{clt_variance_experiment, CltConfig, CltReport, CltRow};
pub use forgetting::{forgetting_experiment, ForgettingReport};
pub use loglik_rate::{loglik_rate_experiment, loglik_rate_on, rate_series, LoglikRateReport};
pub use lp::{lp_error_experiment, LpConfig, LpReport, LpRow};
pub use reference::{ExactReference, ReferenceKind};
pub use stability::{
    variance_sequence_experiment, variance_sequence_on, StabilityConfig, StabilityReport, StabilityThresholds,
};
pub use stats::{trend_test, trend_test_with, TrendTest};
