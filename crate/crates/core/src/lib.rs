//! Proximity-ordered B-matrix associative memory on 3D neuron geometries.
//!
//! Memories are stored Hebbian-style; recall starts from a single stimulated
//! neuron and clamps the remaining neurons one at a time in order of their
//! distance from it. [`interplay`] runs two such sequences from remote
//! sources at once, each feeding its clamped values into the other.
//!
//! Neuron indices are 0-based in the API and 1-based in every report, file
//! and error message.

pub mod error;
pub mod experiment;
pub mod fixture;
pub mod interplay;
pub mod memory;
pub mod policy;
pub mod recall;
pub mod topology;

pub mod cli;

pub use error::{Error, Result};
pub use policy::Policies;
