//! Exact finite models for twisted equivariant cyclic homology, transgression of
//! groupoid 2-cocycles, truncated Cartan complexes and the localized HKR map.

pub mod cartan;
pub mod cyclic;
pub mod error;
pub mod extension;
pub mod groupoid;
pub mod hkr;
pub mod linalg;
pub mod modular;
pub mod problem;
pub mod run;
pub mod scalar;
pub mod transgression;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
