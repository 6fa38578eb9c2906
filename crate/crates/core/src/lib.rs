//! Warehouse placement: a ground-placement constrained model, samplers that
//! produce populations of partial placements, stacking post-processing, and
//! the classical random-initialization + local-search baseline.

pub mod baseline;
pub mod bench;
pub mod cqm;
pub mod error;
mod layout;
pub mod model;
pub mod postprocess;
pub mod rational;
pub mod seeding;
pub mod solvers;

pub use error::{Error, Result};
