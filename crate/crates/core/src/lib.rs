//! Contextual Graph Markov Model.
//!
//! A stack of independently trained generative layers that encodes labeled
//! graphs of any topology, cycles included, into fixed-size state-count
//! fingerprints, plus kernels, a linear classifier and cross-validation
//! harnesses for graph classification on top of those fingerprints.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod layer;
pub mod seed;
pub mod stack;
pub mod synth;
mod textio;

pub use error::{Error, Result};
