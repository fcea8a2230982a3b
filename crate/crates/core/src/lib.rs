//! Affine Lie algebra g(D4^(1)), its Heisenberg subalgebra of type
//! (1,1,0,1,1), the similarity-reduced Drinfeld-Sokolov hierarchy and the
//! sixth Painleve equation in symmetric form.
//!
//! The crate is layered bottom-up:
//!
//! * [`algebra`]: exact loop-algebra realization, bracket, invariant form,
//!   gradation and nilpotent adjoint exponentials.
//! * [`heisenberg`]: the graded Heisenberg subalgebra and its levels.
//! * [`reduction`]: hierarchy coordinates, constraint residuals and the
//!   per-point solver for the reduced variables.
//! * [`painleve`]: the symmetric form, the Hamiltonian form, the canonical
//!   map to the standard form and an adaptive integrator.
//! * [`weyl`]: the affine Weyl group action on parameters and states.
//! * [`lax`]: the gauge-fixed Lax operators and their compatibility.

pub mod algebra;
pub mod error;
pub mod heisenberg;
pub mod lax;
pub mod linalg;
pub mod ode;
pub mod painleve;
pub mod poly;
pub mod reduction;
pub mod scalar;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
