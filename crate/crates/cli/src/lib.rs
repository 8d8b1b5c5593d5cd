//! Config-driven experiment runner for one-bit graph signal imputation.

pub mod config;
pub mod inspect;
pub mod runner;

pub use config::{
    load_config, parse_config, ConfigError, ExperimentConfig, Method, ResolvedConfig,
};
pub use runner::{run_experiment, RunReport};
