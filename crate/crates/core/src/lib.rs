//! Finite element toolkit for the singular critical-growth problem
//! `-Lap u = h(u) exp(alpha u^2) / |x|^gamma` on planar domains containing the origin.

pub mod energy;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod mesh;
pub mod minimax;
pub mod moser;
pub mod nonlinearity;
pub mod quadrature;
pub mod sparse;
pub mod spectral;
pub mod special;

pub use error::{Error, Result};
