//! Label propagation over conditional-independence graphs.
//!
//! Nodes (publications) are linked by partial correlations recovered from
//! their feature vectors. Known labels are then diffused to unlabelled nodes
//! through transition matrices built from those partial correlations.

pub mod cigraph;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod harness;
pub mod matrix_io;
pub mod problem;
pub mod propagate;
pub mod seed;
pub mod transition;

pub use error::{Error, ErrorKind, Result};
