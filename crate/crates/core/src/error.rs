use thiserror::Error;

use crate::graph::Vertex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no vertices")]
    EmptyHost,

    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },

    #[error("proximity parameter must lie in (0, 1], got {0}")]
    InvalidProximity(f64),

    #[error("repetition count must be at least 1")]
    InvalidRepetitions,

    #[error("pattern family is empty")]
    EmptyFamily,

    #[error("component of {size} vertices exceeds the exact treedepth cap of {cap}; use the heuristic embedding")]
    TreedepthCapExceeded { size: usize, cap: usize },

    #[error("tree order covers {got} vertices but the graph has {expected}")]
    VertexSetMismatch { expected: usize, got: usize },

    #[error("invalid coloring: {0}")]
    InvalidColoring(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bound violated in {stage}: {detail}")]
    BoundViolated { stage: String, detail: String },

    #[error("uniform coloring search exhausted {trials} trials; best kept {best} of required {required}")]
    TrialsExhausted {
        trials: u64,
        best: usize,
        required: usize,
    },

    #[error("layering invariant violated: no candidate part copy at any port")]
    LayeringInvariantViolated,

    #[error("incompatible part copies at source {source_vertex}: images {first} and {second}")]
    IncompatibleParts {
        source_vertex: Vertex,
        first: Vertex,
        second: Vertex,
    },

    #[error("query count differs across sizes: {0:?}")]
    NonConstantQueries(Vec<u64>),

    #[error("instance generation failed: {0}")]
    Generation(String),
}
