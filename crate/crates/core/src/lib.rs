//! Lindblad master-equation integration for small composite quantum systems and
//! measurement of how "quantum" the synchronization between two subsystems is.
//!
//! The crate is `no_std` with `alloc`. Everything is dense or CSR complex
//! arithmetic on matrices of dimension up to a few hundred.

#![no_std]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod matrix;
pub mod models;
pub mod opalg;
pub mod syncmeter;

pub use error::{Error, Result};
pub use matrix::{CMatrix, CsrMatrix};
pub use num_complex::Complex64 as C64;
pub use opalg::{DensityMatrix, Elementary, FactorKind, Operator, SpaceLayout};
