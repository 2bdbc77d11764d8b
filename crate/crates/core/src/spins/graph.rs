use serde::{Deserialize, Serialize};

use super::SpinError;

/// Simple undirected graph on vertices `0..n`. Edges are stored as sorted
/// `(low, high)` pairs without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for GraphSpec {
    type Error = SpinError;
    fn try_from(raw: RawGraph) -> Result<Self, SpinError> {
        GraphSpec::new(raw.n, raw.edges)
    }
}

impl From<GraphSpec> for RawGraph {
    fn from(g: GraphSpec) -> Self {
        RawGraph { n: g.n, edges: g.edges }
    }
}

impl GraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, SpinError> {
        let mut out = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(SpinError::InvalidArgument(format!("self-loop on vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(SpinError::IndexOutOfRange { index: a.max(b), n });
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self { n, edges: out })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn path(n: usize) -> Self {
        Self { n, edges: (1..n).map(|i| (i - 1, i)).collect() }
    }

    pub fn complete(n: usize) -> Self {
        Self { n, edges: (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn neighbours(&self, a: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(x, y)| match (x == a, y == a) {
                (true, _) => Some(y),
                (_, true) => Some(x),
                _ => None,
            })
            .collect()
    }

    pub fn degree(&self, a: usize) -> usize {
        self.edges.iter().filter(|&&(x, y)| x == a || y == a).count()
    }
}
