//! Seeding, configuration, CSV persistence and command dispatch.

pub mod config;
pub mod csv;
mod fields;
pub mod model_file;
pub mod run;
pub mod seed;

pub use config::{load_config, parse_config, Command, ExperimentConfig, ObservationSpec};
pub use csv::{read_real_column, read_series_csv, write_series_csv, Field};
pub use model_file::{load_model, parse_model, LoadedModel};
pub use run::{run, run_config_file, Failure, Outcome, Overrides};
pub use seed::{derive_seed, SeedStream, SeedTags};
