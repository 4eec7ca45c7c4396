//! Finite-dimensional toolkit for intertwining operators.
//!
//! Builds partner operators `theta2` from a pair `(theta1, x)` with
//! `[x x^dagger, theta1] = 0`, transports eigenfamilies along `x^dagger`,
//! and checks the attached structural results numerically: kernel
//! equivalences, completeness versus invertibility of `x^dagger x`,
//! Riesz bases and their duals, pseudo-hermiticity, and the oscillator,
//! quon and pseudo-boson models.

pub mod error;
pub mod intertwine;
pub mod linalg;
pub mod models;
pub mod random;
pub mod riesz;

pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances, Vector, C64};
