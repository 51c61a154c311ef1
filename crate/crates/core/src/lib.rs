//! Numerical core for variable exponent Lebesgue spaces on discretized boxes:
//! grids and exponent fields, rearrangements, modular and norms, maximal and
//! sharp maximal operators, singular integrals and commutators, and Banach
//! lattice constructions.

pub mod error;
pub mod grid;
pub mod lattice;
pub mod linalg;
pub mod maximal;
pub mod numeric;
pub mod optim;
pub mod rearrange;
pub mod singular;
pub mod varlp;

pub use error::{Error, Result};
pub use grid::{CubeWindow, ExponentField, GridBox, GridFunction, WeightedMultiset};
