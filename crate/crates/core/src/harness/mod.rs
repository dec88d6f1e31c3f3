//! Run configuration, manifests, trace noise, stability sweeps, the oracle
//! suite, and the command implementations behind the `paspeed` binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod noise;
pub mod oracle;
pub mod sweep;

pub use config::{Config, TWO_INCLUSION_TOML};
pub use manifest::{manifest_path, RunManifest};
pub use noise::add_noise;
pub use oracle::{oracle_check, OracleCheck, OracleHooks, OracleReport};
pub use sweep::{data_discrepancy, fit_loglog, stability_sweep, Metric, SlopeFit, StabilityCurve, SweepPoint, SweepSpec};
