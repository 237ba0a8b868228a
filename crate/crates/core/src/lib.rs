//! Co-manifold learning on partially observed matrices.

pub mod cli;
pub mod datasets;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod incomplete;
pub mod io;
pub mod metric;
pub mod penalty;
pub mod pipeline;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};

/// Which mode of the matrix an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Rows,
    Columns,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rows => "rows",
            Mode::Columns => "columns",
        }
    }
}
