pub mod cli;
pub mod config;
pub mod error;
pub mod levinson;
pub mod potentials;
pub mod quadrature;
pub mod radial;
pub mod smatrix;
pub mod spectrum;

pub use error::{Error, Result};
