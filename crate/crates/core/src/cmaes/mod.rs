//! CMA-ES with IPOP restarts, run recording and smoothed resampling.

mod engine;
mod params;
mod run;
mod smoothing;

pub use engine::{sample_population, update, update_step, UpdateOutcome};
pub use params::{default_params, expected_norm, CmaParams};
pub use run::{run, run_ipop, run_with, RunOptions, RunRecord, Termination};
pub use smoothing::{smoothed_distribution, smoothed_sample, smoothing_weights};
