//! Lie point symmetries of second-order delay ordinary differential systems.

pub mod error;
pub mod expr;
pub mod integrate;
pub mod linalg;
pub mod linear;
pub mod catalog;
pub mod cli;
pub mod dods;
pub mod quadrature;
pub mod reduce;
pub mod roots;
pub mod sampling;
pub mod symmetry;
pub mod traffic;

pub use error::{Error, Result};
