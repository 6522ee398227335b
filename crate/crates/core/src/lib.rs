//! Two-stage stochastic linear programs without relatively complete recourse:
//! sample average approximation, feasibility estimation, padded SAA and
//! sample-size bounds.

pub mod bounds;
pub mod error;
pub mod feasibility;
pub mod model;
pub mod padded;
pub mod saa;
pub mod sampling;
pub mod solver_backend;
pub mod trp;

pub use error::{Error, Result};
