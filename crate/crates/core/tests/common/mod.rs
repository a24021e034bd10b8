//! Independent reference implementations used as test oracles, and fixtures.
#![allow(dead_code)]

pub mod fixtures;
pub mod oracles;
pub mod random;
