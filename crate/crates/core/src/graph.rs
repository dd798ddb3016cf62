//! Weighted undirected graphs and the shift operators derived from them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating symmetry of externally supplied matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Functional-system tag attached to a node.
pub type SystemId = u32;

/// A weighted undirected graph with optional node labels and system tags.
///
/// The weight matrix is symmetric, nonnegative, and has a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BrainGraph {
    weights: DMatrix<f64>,
    labels: Option<Vec<String>>,
    systems: Option<BTreeMap<usize, SystemId>>,
}

impl BrainGraph {
    /// Assemble a graph from an undirected edge list.
    ///
    /// Each unordered pair may appear once; `(i, j)` and `(j, i)` count as the same edge.
    pub fn from_edges(
        edges: &[(usize, usize, f64)],
        n_nodes: usize,
        labels: Option<Vec<String>>,
        systems: Option<BTreeMap<usize, SystemId>>,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::TooSmall { min: 1, got: 0 });
        }
        let mut weights = DMatrix::zeros(n_nodes, n_nodes);
        let mut seen = HashSet::with_capacity(edges.len());
        for &(i, j, w) in edges {
            for idx in [i, j] {
                if idx >= n_nodes {
                    return Err(Error::IndexOutOfRange { index: idx, n_nodes });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::DuplicateEdge { i, j });
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Self::assemble(weights, labels, systems)
    }

    /// Wrap a dense weight matrix after validating symmetry, sign and diagonal.
    pub fn from_dense(
        weights: DMatrix<f64>,
        labels: Option<Vec<String>>,
        systems: Option<BTreeMap<usize, SystemId>>,
    ) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 {
            return Err(Error::TooSmall { min: 1, got: 0 });
        }
        if weights.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.ncols() });
        }
        let asym = max_asymmetry(&weights);
        if asym > SYMMETRY_TOL {
            return Err(Error::AsymmetricMatrix(asym));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::SelfLoop(i));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if w < 0.0 || !w.is_finite() {
                    return Err(Error::NegativeWeight { i, j, weight: w });
                }
            }
        }
        Self::assemble(weights, labels, systems)
    }

    fn assemble(
        weights: DMatrix<f64>,
        labels: Option<Vec<String>>,
        systems: Option<BTreeMap<usize, SystemId>>,
    ) -> Result<Self> {
        let n = weights.nrows();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.len() });
            }
        }
        if let Some(s) = &systems {
            if let Some((&idx, _)) = s.iter().find(|(&idx, _)| idx >= n) {
                return Err(Error::IndexOutOfRange { index: idx, n_nodes: n });
            }
        }
        Ok(Self { weights, labels, systems })
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn systems(&self) -> Option<&BTreeMap<usize, SystemId>> {
        self.systems.as_ref()
    }

    pub fn with_systems(mut self, systems: BTreeMap<usize, SystemId>) -> Result<Self> {
        let n = self.n_nodes();
        if let Some((&idx, _)) = systems.iter().find(|(&idx, _)| idx >= n) {
            return Err(Error::IndexOutOfRange { index: idx, n_nodes: n });
        }
        self.systems = Some(systems);
        Ok(self)
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_nodes(), self.weights.row_iter().map(|r| r.sum()))
    }

    pub fn n_edges(&self) -> usize {
        let n = self.n_nodes();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] != 0.0)
            .count()
    }

    /// Edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[(i, j)];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Breadth-first connectivity check over nonzero edges.
    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !visited[v] && self.weights[(u, v)] != 0.0 {
                    visited[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
}

/// Largest absolute difference between `m` and its transpose.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Undirected cycle on `t` nodes, the graph whose GFT is the DFT.
pub fn cycle_graph(t: usize) -> Result<BrainGraph> {
    if t < 3 {
        return Err(Error::TooSmall { min: 3, got: t });
    }
    let edges: Vec<_> = (0..t).map(|i| (i, (i + 1) % t, 1.0)).collect();
    BrainGraph::from_edges(&edges, t, None, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftVariant {
    Adjacency,
    Laplacian,
    SymNormalizedLaplacian,
    RwNormalizedLaplacian,
}

impl ShiftVariant {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, ShiftVariant::RwNormalizedLaplacian)
    }

    /// Laplacian variants order frequencies by ascending eigenvalue.
    pub fn is_laplacian_family(self) -> bool {
        !matches!(self, ShiftVariant::Adjacency)
    }
}

impl fmt::Display for ShiftVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShiftVariant::Adjacency => "adjacency",
            ShiftVariant::Laplacian => "laplacian",
            ShiftVariant::SymNormalizedLaplacian => "sym-normalized-laplacian",
            ShiftVariant::RwNormalizedLaplacian => "rw-normalized-laplacian",
        };
        f.write_str(s)
    }
}

impl FromStr for ShiftVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjacency" | "a" => Ok(ShiftVariant::Adjacency),
            "laplacian" | "l" => Ok(ShiftVariant::Laplacian),
            "sym-normalized-laplacian" | "sym" | "lsym" => Ok(ShiftVariant::SymNormalizedLaplacian),
            "rw-normalized-laplacian" | "rw" | "lrw" => Ok(ShiftVariant::RwNormalizedLaplacian),
            other => Err(Error::InvalidParameter(format!("unknown shift variant `{other}`"))),
        }
    }
}

/// A graph shift operator: one of the adjacency or Laplacian matrices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    variant: ShiftVariant,
    matrix: DMatrix<f64>,
}

impl ShiftOperator {
    pub fn new(graph: &BrainGraph, variant: ShiftVariant) -> Result<Self> {
        let w = graph.weights();
        let n = graph.n_nodes();
        let deg = graph.degrees();
        let matrix = match variant {
            ShiftVariant::Adjacency => w.clone(),
            ShiftVariant::Laplacian => {
                let mut l = -w.clone();
                for i in 0..n {
                    l[(i, i)] = deg[i];
                }
                l
            }
            ShiftVariant::SymNormalizedLaplacian | ShiftVariant::RwNormalizedLaplacian => {
                if let Some(i) = deg.iter().position(|&d| d <= 0.0) {
                    return Err(Error::IsolatedNode(i));
                }
                let mut l = DMatrix::identity(n, n);
                for i in 0..n {
                    for j in 0..n {
                        if w[(i, j)] != 0.0 {
                            l[(i, j)] = if variant == ShiftVariant::SymNormalizedLaplacian {
                                -w[(i, j)] / (deg[i] * deg[j]).sqrt()
                            } else {
                                -w[(i, j)] / deg[i]
                            };
                        }
                    }
                }
                l
            }
        };
        Ok(Self { variant, matrix })
    }

    /// Wrap an arbitrary square matrix; symmetry is checked at eigendecomposition.
    pub fn from_matrix(variant: ShiftVariant, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        Ok(Self { variant, matrix })
    }

    pub fn variant(&self) -> ShiftVariant {
        self.variant
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Convenience wrapper matching the free-function style used elsewhere.
pub fn shift_operator(graph: &BrainGraph, variant: ShiftVariant) -> Result<ShiftOperator> {
    ShiftOperator::new(graph, variant)
}
