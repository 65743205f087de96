//! Numerical checks of the model assumptions behind time-uniform stability.

pub mod assumptions;
pub mod doeblin;
pub mod lgss;

pub use assumptions::{
    check_assumptions, check_observations, clopper_pearson_lower, frequency_check, AssumptionConfig,
    AssumptionModel, AssumptionReport, CheckEntry, CheckStatus, DriftCheck, FrequencyCheck, ObsSet, TailCheck,
    BLOCK_FREQUENCY_TARGET,
};
pub use doeblin::{local_doeblin_constants, DoeblinCertificate, HyperRectangle, TransitionDensity};
pub use lgss::{
    controllability_matrix, f_matrix, g_matrix, lgss_block_density, lgss_block_likelihood,
    lgss_block_log_likelihood, lgss_structure, numerical_rank, observability_matrix, LgssStructure,
};
