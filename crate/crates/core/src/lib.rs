//! One-level overlapping Schwarz preconditioners (SORAS and ORAS) for the
//! heterogeneous reaction-convection-diffusion equation, a GMRES driver,
//! and numerical checks of the convergence theory: the weighted norm of the
//! preconditioned operator and the distance of its field of values from the
//! origin.

pub mod analysis;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod preconditioner;
pub mod problem;

pub use error::{Error, Result};
