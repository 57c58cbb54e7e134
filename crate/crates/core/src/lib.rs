//! Aw-Rascle-Zhang traffic model with fixed and moving flux constraints.
//!
//! The crate provides exact classical and constrained Riemann solvers,
//! Godunov schemes that capture the nonclassical shock attached to a slow
//! bus, a moving-mesh variant, the coupled bus ODE and an exact wave-front
//! tracking engine for the fixed constraint.

pub mod arz;
pub mod bus;
pub mod capture;
pub mod constraint;
pub mod error;
pub mod godunov;
pub mod mesh;
pub mod riemann;
pub mod scenario;
pub mod sim;
pub mod wavefront;

pub use arz::{Conserved, InvariantDomain, PressureLaw, State};
pub use error::{Error, Result};
