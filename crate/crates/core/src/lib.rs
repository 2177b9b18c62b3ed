//! Divided-difference operators on quadratic and q-quadratic lattices,
//! moment functionals, and classical orthogonal polynomial sequences.

pub mod battery;
pub mod characterize;
pub mod classical;
pub mod cli;
pub mod error;
pub mod families;
pub mod functional;
pub mod lattice;
pub mod operators;
pub mod polynomial;
pub mod scalar;
pub mod ttrr;

pub use error::{Error, Result};
pub use functional::MomentFunctional;
pub use lattice::{Lattice, LatticeKind, LatticeSpec};
pub use polynomial::Polynomial;
pub use scalar::{approx_eq, Backend, Scalar};
pub use ttrr::{build_ops, OpSequence, Ttrr};
