//! Experimental machinery for relating fitness-landscape features to
//! surrogate-model prediction error in CMA-ES driven black-box optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`sample`], [`state`] and [`transform`] hold the shared numeric types and
//!   the σ²C-basis transform used by model training and feature computation.
//! * [`benchfns`] provides analytic test objectives with instance transforms.
//! * [`cmaes`] is the CMA-ES engine with IPOP restarts and smoothed resampling.
//! * [`tss`] implements training-set selection under the σ²C metric.
//! * [`models`] contains the surrogate models and their error measures.
//! * [`features`] computes landscape features over sample-set variants.
//! * [`analysis`] holds robustness, clustering and nonparametric statistics.
//! * [`pipeline`] wires everything into a reproducible, file-based experiment.

// `!(x > 0.0)` is deliberate: it rejects NaN too. Index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod benchfns;
pub mod cmaes;
pub mod error;
pub mod features;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod sample;
pub mod seeding;
pub mod state;
pub mod stats;
pub mod transform;
pub mod tss;

pub use error::{Error, Result};
pub use sample::{Point, SampleSet};
pub use state::DistributionState;
pub use transform::{Metric, TransformSpec};
