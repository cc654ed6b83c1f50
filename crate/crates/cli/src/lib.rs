//! Stage runner behind the `onhbf` binary.
//!
//! Every stage reads its inputs from the output directory, checks that they
//! were produced under the current configuration, writes its outputs
//! atomically and records a stamp. A stage whose stamp matches the current
//! configuration hash and whose outputs still hash to the recorded values is
//! skipped.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod stages;

pub use config::{Overrides, PipelineConfig};
pub use error::{exit, CliError, CliResult};
pub use stages::{Pipeline, Stage};
