//! Exact algebraic K-stability data for torus-equivariant subschemes of
//! `P^N1 x C^N2`: weight-graded Hilbert dimensions, weighted volumes,
//! Futaki invariants, flat limits through initial ideals, and volume
//! minimization over the Reeb cone.

pub mod cli;
mod error;
pub mod grading;
pub mod groebner;
pub mod hilbert;
pub mod polyalg;
pub mod series;
pub mod stability;
pub mod volume;

pub use error::{Error, Result};
pub use grading::{ReebVector, TorusDirection, TorusVector, WeightedSetup};
pub use groebner::{GbLimits, Ideal, MonomialOrder};
pub use polyalg::{parse_polynomial, format_polynomial, Exponent, Polynomial, Rational, VarKind, VariableTable};
