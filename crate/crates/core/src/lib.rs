//! Random walk on the hexagonal lattice.
//!
//! The walker alternates between the two vertex classes of the honeycomb and
//! picks one of three edges with class-dependent probabilities. This crate
//! computes the state distribution exactly (forward iteration and a closed
//! form through a terminating `₂F₁`), its generating function and moments,
//! Monte Carlo scaling-limit diagnostics, and large and moderate deviation
//! rate functions.

pub mod cli;
pub mod closed_form;
pub mod deviations;
pub mod engine;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod moments;
pub mod montecarlo;
pub mod scalar;
pub mod validation;

pub use closed_form::{state_probability, state_probability_even, ClosedForm, Provenance};
pub use deviations::{lambda, legendre, moderate_rate, RateResult};
pub use engine::{evolve, Distribution, Engine};
pub use error::{Error, Result};
pub use lattice::{CartesianPoint, LatticeVertex, StepProbabilities, VertexClass};
pub use moments::{asymptotic_covariance, moments, pgf, MomentSummary};
pub use montecarlo::{sample_endpoint, Sampler};
pub use scalar::{ArithmeticMode, LogProb, Scalar};
