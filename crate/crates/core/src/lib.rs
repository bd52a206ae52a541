//! Immersed-boundary incompressible flow solver with control-volume and
//! Lagrange-multiplier force/torque diagnostics.

pub mod error;
pub mod mesh;
pub mod kernels;
pub mod bodies;
pub mod cv_forces;
pub mod navier;
pub mod poisson;
pub mod stokes;
pub mod harness;

pub use error::{Error, Result};
