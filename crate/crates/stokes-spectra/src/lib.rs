//! Linear stability of small-amplitude deep-water Stokes waves under
//! long-wave (Bloch) perturbations.
//!
//! The pipeline runs from the Stokes series ([`stokes`]) through the
//! conformal flattening of the surface ([`conformal`]) to the Bloch operator
//! ([`bloch`]), whose spectrum is computed directly with [`eigen`] and
//! indirectly through the four-dimensional reduction in [`reduction`].
//! [`asymptotics`] holds the closed forms both routes are compared with.

pub mod acceptance;
pub mod asymptotics;
pub mod background;
pub mod bloch;
pub mod conformal;
pub mod eigen;
pub mod error;
pub mod fourier;
pub mod reduction;
pub mod stokes;

pub use error::{Error, Result};
pub use num_complex::Complex64;
