//! Experiment driver for the `contact-hj` library: TOML configs, the shipped
//! presets, the convergence / properties / critical pipelines and SVG plots.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod plot;

pub use config::{preset, ExperimentConfig, PRESET_NAMES};
pub use experiments::{exit_code, run_convergence, run_critical, run_properties};
