//! Chance-constrained day-ahead scheduling for a small heat-and-electricity system.

pub mod error;
pub mod harness;
pub mod milp;
pub mod building;
pub mod cli;
pub mod devices;
pub mod probseq;
pub mod scheduler;

pub use error::{Error, Result};
