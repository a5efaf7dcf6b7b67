//! Random-neighbor query access to a host graph with exact query accounting.
//!
//! A tester sees the host only through [`GraphOracle`]: it knows the vertex
//! count, may sample a uniform vertex, and may ask for a uniform random
//! neighbor of a vertex (with replacement across calls). Each trial owns one
//! oracle seeded from a [`Seed`]; every bounded BFS call draws from its own
//! ChaCha stream so runs replay bit-identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

/// Root of all randomness in one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Name of the environment variable consulted when no seed is given.
    pub const ENV_VAR: &'static str = "HTEST_SEED";

    /// Independent child seed for trial `index` (SplitMix64 finalizer).
    pub fn derive(self, index: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    /// Reads `HTEST_SEED`, if set and a valid decimal u64.
    pub fn from_env() -> Option<Seed> {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .map(Seed)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryRecord {
    Vertex {
        returned: Vertex,
    },
    Neighbor {
        of: Vertex,
        returned: Option<Vertex>,
        #[serde(skip_serializing_if = "std::ops::Not::not", default)]
        padding: bool,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLog {
    pub neighbor_queries: u64,
    pub vertex_samples: u64,
    /// Neighbor queries issued only to realize the fixed budget; their
    /// answers are discarded. Included in `neighbor_queries`.
    pub padding_queries: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transcript: Option<Vec<QueryRecord>>,
}

impl QueryLog {
    pub fn total(&self) -> u64 {
        self.neighbor_queries + self.vertex_samples
    }
}

/// The only handle through which a tester observes its host.
pub struct GraphOracle<'g> {
    graph: &'g Graph,
    seed: Seed,
    stream: u64,
    rng: ChaCha8Rng,
    log: QueryLog,
}

impl<'g> GraphOracle<'g> {
    pub fn new(graph: &'g Graph, seed: Seed) -> Self {
        GraphOracle {
            graph,
            seed,
            stream: 0,
            rng: seed.rng(),
            log: QueryLog::default(),
        }
    }

    /// Records every query in the log's transcript.
    pub fn with_transcript(mut self) -> Self {
        self.log.transcript = Some(Vec::new());
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.n()
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn into_log(self) -> QueryLog {
        self.log
    }

    /// Switches to the next independent random stream of this trial.
    pub fn begin_stream(&mut self) {
        self.stream += 1;
        let mut rng = self.seed.rng();
        rng.set_stream(self.stream);
        self.rng = rng;
    }

    /// Uniform vertex of the host.
    pub fn random_vertex(&mut self) -> Result<Vertex> {
        let n = self.graph.n();
        if n == 0 {
            return Err(Error::EmptyHost);
        }
        let v = self.rng.random_range(0..n);
        self.log.vertex_samples += 1;
        if let Some(t) = self.log.transcript.as_mut() {
            t.push(QueryRecord::Vertex { returned: v });
        }
        Ok(v)
    }

    /// Uniform random neighbor of `v`, or `None` when `v` is isolated (the
    /// query still counts).
    pub fn random_neighbor(&mut self, v: Vertex) -> Result<Option<Vertex>> {
        self.neighbor_query(v, false)
    }

    /// Issues `count` discarded neighbor queries on `v`.
    pub fn pad(&mut self, v: Vertex, count: u64) -> Result<()> {
        for _ in 0..count {
            self.neighbor_query(v, true)?;
        }
        self.log.padding_queries += count;
        Ok(())
    }

    fn neighbor_query(&mut self, v: Vertex, padding: bool) -> Result<Option<Vertex>> {
        let n = self.graph.n();
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        let nbrs = self.graph.neighbors(v);
        let w = if nbrs.is_empty() {
            None
        } else {
            Some(nbrs[self.rng.random_range(0..nbrs.len())])
        };
        self.log.neighbor_queries += 1;
        if let Some(t) = self.log.transcript.as_mut() {
            t.push(QueryRecord::Neighbor {
                of: v,
                returned: w,
                padding,
            });
        }
        Ok(w)
    }
}
