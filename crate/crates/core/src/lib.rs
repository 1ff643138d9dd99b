//! Variable-exponent Lebesgue and Besov norms on periodic grids, continuous
//! Calderón frames, Peetre maximal functions, atomic decompositions and a
//! numerical verification harness.

pub mod atomic;
pub mod besov;
pub mod cli;
pub mod config;
pub mod error;
pub mod exponents;
pub mod frame;
pub mod grid;
pub mod json;
pub mod lebesgue;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
