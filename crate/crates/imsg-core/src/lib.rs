//! Numerical laboratory for finite-state Markov semigroups and their
//! discretized 1-D diffusion counterparts.
//!
//! The crate is organised around a small set of value types (state spaces,
//! generators, functionals, probability measures) and the operations built on
//! them: semigroup evaluation, carre du champ calculus and curvature bounds,
//! diffusion discretization benchmarks, the induced order over semigroup
//! families, and verification of the ergodicity inequality chain.

pub mod catalog;
pub mod diffusion;
pub mod ergodicity;
pub mod error;
pub mod fixtures;
pub mod gamma;
pub mod generator;
pub mod io;
pub mod poset;
pub mod semigroup;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
