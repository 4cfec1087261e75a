//! Numerical laboratory for the strongly damped semilinear wave equation
//!
//! ```text
//! u_tt − Δu − Δu_t + u_t = f(u)   in Ω,   u = 0 on ∂Ω,
//! ```
//!
//! on intervals and rectangles: finite-difference discretization, an IMEX
//! time integrator with blow-up detection, the energy/Nehari functionals,
//! and explicit upper and lower bounds for the blow-up time.

pub mod bounds;
pub mod error;
pub mod expr;
pub mod functionals;
pub mod integrator;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod nonlinearity;
pub mod numeric;

pub use error::{Error, Result};
pub use mesh::{DiscreteDomain, Field};
pub use nonlinearity::Nonlinearity;
