//! Optical quantum state tomography in a truncated Fock space.
//!
//! The crate covers the whole loop: build states ([`states`]), simulate
//! Husimi-Q and photon-number measurements ([`measurement`]), corrupt them
//! with state-preparation and image noise ([`noise`]), and reconstruct the
//! density matrix with maximum-likelihood gradient ascent or an adversarial
//! generator/discriminator pair ([`tomography`]). [`dataset`] produces the
//! standard labelled dataset and [`benchmark`] compares the two solvers.

pub mod benchmark;
pub mod dataset;
pub mod error;
pub mod grad;
pub mod io;
pub mod measurement;
pub mod noise;
pub mod quantum;
pub mod rng;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use quantum::{fidelity, CholeskyParams, ComplexMatrix, ComplexVector, DensityMatrix};
