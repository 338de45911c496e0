//! Units-equivariant regression built on exact integer dimensional analysis.
//!
//! Dimensioned inputs are turned into dimensionless rational monomials
//! (the integer nullspace of the units matrix), a dimensionless model is fit
//! on them, and a decoder monomial with the label's units restores the
//! output dimensions. Predictions are then exactly equivariant under any
//! rescaling of the base units.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod intlinalg;
pub mod io;
pub mod pi;
pub mod regress;
pub mod sims;
pub mod units;

pub use error::{Error, Result};
