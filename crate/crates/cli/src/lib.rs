//! Command-line front end and desk-scale experiment harness for `padded-saa`.

pub mod commands;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod stats;
pub mod workers;
