//! Summability of vector sequences by families of operator matrices,
//! with ideal convergence and certified horizon checks.

pub mod corpus;
pub mod document;
pub mod entry;
pub mod error;
pub mod ideal;
pub mod matrix;
pub mod regularity;
pub mod runner;
pub mod scalar;
pub mod selection;
pub mod sequence;
pub mod sets;
pub mod sigma;
pub mod transform;

pub use error::{Result, SummaError};
