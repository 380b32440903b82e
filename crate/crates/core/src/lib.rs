//! Spectral shift functions, double operator integrals and unitary
//! dilations for finite matrices.

pub mod calculus;
pub mod cli;
pub mod dilation;
pub mod doi;
pub mod error;
pub mod intermediate;
pub mod linalg;
pub mod shift;

pub use error::{Error, Result};
