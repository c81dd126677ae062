//! Simulation of a parity-engineered flux qubit coupled to a resonator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod operators;
pub mod rwa;
pub mod validation;

pub use error::{Error, Result};
