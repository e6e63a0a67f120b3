//! Minibatch heavy-ball momentum solvers for linear least squares.
//!
//! The crate provides, in one place:
//! - dense/CSR matrices with Gram spectra and reference least-squares
//!   solutions ([`linalg`]),
//! - importance row sampling with the batch-gradient weighting ([`sampling`]),
//! - synthetic problem generators with prescribed spectra, sparse Bernoulli
//!   matrices, inconsistent perturbations, and a small parallel-beam
//!   tomography system ([`problems`]),
//! - closed-form momentum parameter selection, transition-matrix spectra,
//!   eigenvector condition numbers, and batch-size/horizon formulas
//!   ([`momentum`]),
//! - matrix-concentration bound calculators with Monte Carlo verification
//!   ([`concentration`]),
//! - the iterative solvers themselves plus theoretical envelope curves
//!   ([`solvers`]),
//! - experiment orchestration with percentile aggregation and CSV/JSON
//!   emission ([`experiments`]).

pub mod concentration;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod momentum;
pub mod problems;
pub mod rng;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
