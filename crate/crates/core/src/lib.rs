pub mod aggregation;
pub mod cli;
pub mod dense;
pub mod eigen;
pub mod error;
pub mod experiment;
mod float_serde;
pub mod hierarchy;
pub mod krylov;
pub mod mm;
pub mod problems;
pub mod smoother;
pub mod sparse;
pub mod splitting;

pub use error::{Error, Result};
