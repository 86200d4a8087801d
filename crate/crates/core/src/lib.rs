//! Singular Toda systems of VHS type.
//!
//! The crate has two halves. [`stability`] decides, in exact rational
//! arithmetic, whether a prescribed set of singular strengths admits a
//! solution (slope stability of the associated nilpotent Higgs bundle).
//! [`torus`], [`solver`] and [`higgs`] construct the solution numerically on
//! a flat rectangular torus and check it against the integral identities,
//! the prescribed log asymptotics and the flatness of the Higgs connection.

pub mod error;
pub mod higgs;

pub mod rational;
pub mod solver;
pub mod stability;
pub mod torus;

pub use error::{Error, Result};
