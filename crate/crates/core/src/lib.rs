//! Locally differentially private pointwise density estimation.
//!
//! The crate bundles:
//! * privatised kernel and projection density estimators built on a general
//!   Laplace perturbation channel ([`kde`], [`pde`], [`privacy`]),
//! * a data-driven bandwidth / dimension selector of Goldenshluger-Lepski
//!   type adjusted for budget splitting across releases ([`adaptive`]),
//! * ground-truth test densities with exact evaluation and sampling
//!   ([`densities`]),
//! * a Monte Carlo experiment engine for risk estimation, convergence-rate
//!   fitting and concentration-inequality audits ([`simulation`]).
//!
//! All randomness flows through explicit seeds, so every experiment is
//! reproducible bit for bit. With the default `parallel` feature the
//! replication loops run on rayon; disabling it yields a sequential build
//! with identical output.

pub mod adaptive;
pub mod densities;
pub mod error;
pub mod exec;
pub mod kde;
pub mod pde;
pub mod privacy;
pub mod quadrature;
pub mod simulation;

pub use error::{Error, Result};
