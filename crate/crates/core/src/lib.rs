//! Relativistic atomic structure in a kinetically balanced Gaussian basis.

pub mod angular;
pub mod basis;
pub mod cli;
pub mod config;
pub mod dirac_one;
pub mod error;
pub mod grid;
pub mod integrals;
pub mod linalg;
pub mod nucleus;
pub mod properties;
pub mod quadrature;
pub mod scf;
pub mod special;

pub use error::{Error, Result};
