//! Direct-method calculus of variations in anisotropic Orlicz-Sobolev spaces.
//!
//! The crate is organised around the objects of the theory:
//!
//! * [`nfunction`]: N-infinity functions `Phi: R^d -> [0, inf)`, their growth
//!   classes (Delta_2, orderings) and the greatest convex radial minorant.
//! * [`conjugate`]: the complementary (Fenchel) function `Phi*`, Young's
//!   inequality and identity, and the nabla_2 condition.
//! * [`orlicz`]: periodic trajectories, modulars, Luxemburg norms and the
//!   Morrey / Sobolev / Poincare-Wirtinger embedding inequalities.
//! * [`potential`]: potentials `F(t, x)` and validators for the structural
//!   hypotheses imposed on them.
//! * [`solver`]: the discrete action integral, its exact gradient, an L-BFGS
//!   minimizer and the Euler-Lagrange certification of the result.
//! * [`cli`]: the batch front end behind the `orliczvar` binary.

pub mod cli;
pub mod conjugate;
pub mod error;
pub mod fourier;
pub mod nfunction;
pub mod orlicz;
pub mod potential;
pub mod sampling;
pub mod solver;
pub(crate) mod vecops;

pub use conjugate::{conjugate, ConjugateFunction};
pub use error::{Error, Result};
pub use nfunction::{ConvexFunction, NFunction, NFunctionSpec};
pub use orlicz::Trajectory;
pub use potential::{Potential, PotentialSpec};
pub use solver::{ProblemSpec, SolveReport};
