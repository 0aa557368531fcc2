//! Configuration-driven runner for the dHYM lab: solves, continuity paths,
//! envelopes, stability sweeps, audits and the verification suites, with
//! JSON manifests and CSV tables as output.
//!
//! Exit statuses: 0 success, 2 solver failure, 3 audit failure, 4
//! configuration error.

pub mod config;
pub mod manifest;
pub mod plot;
pub mod run;

pub use config::{Mode, RunConfig};
pub use manifest::{Manifest, Status};
pub use plot::emit_plot_data;
pub use run::{run_config, run_file, run_text, RunOptions, RunOutcome};
