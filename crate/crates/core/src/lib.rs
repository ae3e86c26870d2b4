//! Coherence-penalized Riemannian minimal paths for vessel centerline
//! extraction.

pub mod eikonal;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod io;
pub mod metric;
pub mod oof;
pub mod path;
pub mod pipeline;
pub mod tracer;

pub use error::{Error, Result};
