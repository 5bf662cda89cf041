//! Staggered discontinuous Galerkin immersed boundary solver for two-dimensional
//! fluid–structure interaction.

pub mod app;
pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod ib;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod spaces;
pub mod solver;
pub mod sparse;

pub use error::{Result, SdgError};
