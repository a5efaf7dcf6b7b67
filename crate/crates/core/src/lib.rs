pub mod cli;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod oracle;
pub mod oracles;
pub mod pipeline;
pub mod selfcheck;
pub mod sparsity;
pub mod tester;

pub use error::{Error, Result};
pub use graph::{CopySet, Graph, PatternCopy, Vertex};
