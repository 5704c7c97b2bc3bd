//! Reproduction harness for the `starkmbl` simulations.
//!
//! An [`ExperimentConfig`] (strict JSON) selects one experiment; running it
//! writes CSV data, a `meta.json`, a gnuplot script and finally a
//! [`RunManifest`] with the SHA-256 of every produced file.

pub mod config;
pub mod manifest;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{preset, ExperimentConfig, ExperimentKind, PRESETS};
pub use manifest::{read_manifest, RunManifest};
pub use run::{run_experiment, run_sweep};
pub use verify::{verify_params, VerifyReport};
