//! Synthesis and simulation of probabilistic cloning machines whose
//! success branch is a superposition of 2, 3, ..., M+1 exact copies of the
//! input state.

pub mod error;
pub mod hilbert;

pub use error::{Error, Result};
pub mod cli;
pub mod optimizer;
pub mod rng;
pub mod simulator;
pub mod synthesis;
