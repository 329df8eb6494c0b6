//! Experiment harness around `tapauth-core`: scenario files, on-disk formats,
//! result bundles and the pipelines behind the `tapauth` command.

// `!(x > 0.0)` rejects NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod error;
pub mod formats;
pub mod run;
pub mod scenario;

pub use bundle::{Artifact, Provenance, ResultBundle, RESULT_BUNDLE_SCHEMA};
pub use error::{HarnessError, Result};
pub use scenario::Scenario;
