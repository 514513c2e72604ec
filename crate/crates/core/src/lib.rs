//! Canonical systems, their Darboux (GBDT) transformations, explicit
//! fundamental solutions, Weyl functions and the related Volterra, string
//! and Schrodinger constructions, each paired with a numerical oracle.

pub mod error;
pub mod num;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub mod canonical;
pub mod gbdt;
pub mod initial;
pub mod weyl;
pub mod volterra;
pub mod string;
pub mod dynamical;
