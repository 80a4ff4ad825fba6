//! Configuration, file formats and run orchestration for `ktc-core`.
//!
//! Fields go to CSV (`moments.csv`, `kinetic.csv`), structured diagnostics to
//! `diagnostics.json`. Every file records the SHA-256 of the canonical
//! config, so identical configs produce byte-identical output.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting range checks

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, parse_config_in, Field, FluxChoice, InitialCondition, RunConfig};
pub use error::{CliError, Result};
pub use run::{execute, output_dir, write_riemann_exact, RunSummary, OUTPUT_DIR_ENV};
