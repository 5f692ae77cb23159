//! Local times of continuous semimartingales on a uniform grid.
//!
//! Three local-time estimators, the balayage and scale-function transforms,
//! discrete solvers for reflected, skew, Barlow and perturbed Tanaka
//! equations, and a registry of seed-reproducible verification experiments.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod paths;
pub mod stats;

pub use error::{Error, Result};
pub mod experiments;
pub mod local_time;
pub mod measure;
pub mod sde;
