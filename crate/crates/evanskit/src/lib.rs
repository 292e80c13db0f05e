//! Spectral stability of small-amplitude viscous and relaxation shock profiles
//! by Evans-function winding numbers, plus the slow/fast reduction machinery.

pub mod error;
pub mod evalsys;
pub mod evans;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod profile;
pub mod reduction;
pub mod subspace;

pub use error::{Error, Result};
