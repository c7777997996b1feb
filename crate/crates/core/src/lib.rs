//! Gibbs measures on subshifts of finite type, their generalised Haar
//! bases, and the spectral data of the associated Dirac operator.
//!
//! Symbols are 0-based throughout; [`sft::Word`] prints them 1-based.

#![no_std]

extern crate alloc;

pub mod duality;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod renewal;
pub mod sft;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
