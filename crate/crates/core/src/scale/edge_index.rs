//! Compressed edge lists and sparse neighbourhood aggregation.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::pcm::{ComparisonSet, ObservationMode};

/// Directed edges sorted by `(source, target)` with CSR row offsets, so the
/// out-neighbours of node `i` are the slice `targets[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIndex {
    n: usize,
    sources: Vec<usize>,
    targets: Vec<usize>,
    values: Vec<f64>,
    csr_offsets: Vec<usize>,
}

impl EdgeIndex {
    /// Build from `(source, target, value)` triples in any order.
    pub fn new(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        edges.sort_unstable_by_key(|a| (a.0, a.1));
        for w in edges.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidInput(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
            }
        }
        if let Some(e) = edges.iter().find(|e| e.0 >= n || e.1 >= n) {
            return Err(Error::InvalidInput(format!("edge ({}, {}) outside 0..{n}", e.0, e.1)));
        }
        let mut csr_offsets = vec![0usize; n + 1];
        for e in &edges {
            csr_offsets[e.0 + 1] += 1;
        }
        for k in 0..n {
            csr_offsets[k + 1] += csr_offsets[k];
        }
        let mut sources = Vec::with_capacity(edges.len());
        let mut targets = Vec::with_capacity(edges.len());
        let mut values = Vec::with_capacity(edges.len());
        for (s, t, v) in edges {
            sources.push(s);
            targets.push(t);
            values.push(v);
        }
        Ok(Self {
            n,
            sources,
            targets,
            values,
            csr_offsets,
        })
    }

    /// The observed directed entries with their values. Zero win counts carry
    /// no information and are left out.
    pub fn observed(obs: &ComparisonSet) -> Self {
        let edges = obs
            .edges()
            .iter()
            .filter(|e| obs.mode() == ObservationMode::Cardinal || e.value > 0.0)
            .map(|e| (e.i, e.j, e.value))
            .collect();
        Self::new(obs.n(), edges).expect("comparison sets hold unique in-range pairs")
    }

    /// Undirected neighbourhoods: each observed pair in both directions, value 1.
    pub fn symmetrized(obs: &ComparisonSet) -> Self {
        Self::from_pairs(obs.n(), &obs.undirected_pairs())
    }

    /// Both directions of each unordered pair `(i, j)`, `i != j`, value 1.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(i, j) in pairs {
            edges.push((i, j, 1.0));
            edges.push((j, i, 1.0));
        }
        edges.sort_unstable_by_key(|a| (a.0, a.1));
        edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
        Self::new(n, edges).expect("deduplicated pairs")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn csr_offsets(&self) -> &[usize] {
        &self.csr_offsets
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.csr_offsets[i]..self.csr_offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.csr_offsets[i + 1] - self.csr_offsets[i]
    }

    /// `(source, target, value)` of edge `k`.
    pub fn edge(&self, k: usize) -> (usize, usize, f64) {
        (self.sources[k], self.targets[k], self.values[k])
    }

    /// Position of edge `(i, j)`, if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.csr_offsets[i];
        self.neighbors(i).binary_search(&j).ok().map(|k| lo + k)
    }
}

/// Row `i` of the result is the sum of rows `x_j` over the out-neighbours `j`
/// of `i`; on a symmetrized index this is the adjacency product `A x`.
pub fn sparse_aggregate(edges: &EdgeIndex, x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((edges.n(), x.ncols()));
    aggregate_into(edges, x, &mut out);
    out
}

/// [`sparse_aggregate`] into a preallocated `n x d` array.
pub(crate) fn aggregate_into(edges: &EdgeIndex, x: ArrayView2<f64>, out: &mut Array2<f64>) {
    assert_eq!(x.nrows(), edges.n(), "row count must match node count");
    assert_eq!(out.dim(), (edges.n(), x.ncols()));
    out.fill(0.0);
    for i in 0..edges.n() {
        let mut row = out.row_mut(i);
        for &j in edges.neighbors(i) {
            row += &x.row(j);
        }
    }
}
