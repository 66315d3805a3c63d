//! Node- and edge-weighted directed graphs and their characteristic operators.
//!
//! Orientation convention: `adjacency[(i, j)]` is the weight of the directed
//! edge `j → i`. Row sums are therefore in-degrees and column sums are
//! out-degrees:
//!
//! ```text
//! D_in[i][i]  = Σ_j W[i][j]
//! D_out[j][j] = Σ_i W[i][j]
//! ```
//!
//! Signals live in the weighted inner-product space `⟨X, Y⟩ = Tr(Xᴴ M Y)`
//! with `M = diag(μ)`.

use crate::cmat::{CMat, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({src} -> {dst}) has negative or non-finite weight {weight}")]
    NegativeWeight { src: usize, dst: usize, weight: f64 },
    #[error("node index {index} out of range for a graph with {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("node {index} has non-positive weight {weight}")]
    NonpositiveNodeWeight { index: usize, weight: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("graph must have at least one node")]
    Empty,
}

/// A weighted directed graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiGraph {
    node_weights: Vec<f64>,
    adjacency: DMatrix<f64>,
}

/// One directed edge `src → dst` with a nonnegative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Self { src, dst, weight }
    }
}

impl DiGraph {
    /// Assembles a graph from an edge list. Duplicate edges accumulate.
    /// Node weights default to one.
    pub fn from_edges(
        n_nodes: usize,
        edges: &[Edge],
        node_weights: Option<&[f64]>,
    ) -> Result<Self, GraphError> {
        if n_nodes == 0 {
            return Err(GraphError::Empty);
        }
        let mut w = DMatrix::zeros(n_nodes, n_nodes);
        for e in edges {
            for index in [e.src, e.dst] {
                if index >= n_nodes {
                    return Err(GraphError::IndexOutOfRange { index, n_nodes });
                }
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(GraphError::NegativeWeight {
                    src: e.src,
                    dst: e.dst,
                    weight: e.weight,
                });
            }
            w[(e.dst, e.src)] += e.weight;
        }
        let mu = match node_weights {
            Some(mu) => mu.to_vec(),
            None => vec![1.0; n_nodes],
        };
        Self::from_adjacency(w, mu)
    }

    /// Wraps an adjacency matrix (`W[i][j]` = weight of `j → i`) after
    /// validating it.
    pub fn from_adjacency(adjacency: DMatrix<f64>, node_weights: Vec<f64>) -> Result<Self, GraphError> {
        let n = adjacency.nrows();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if adjacency.ncols() != n || node_weights.len() != n {
            return Err(GraphError::ShapeMismatch {
                expected: format!("{n}x{n} adjacency with {n} node weights"),
                got: format!(
                    "{}x{} adjacency with {} node weights",
                    adjacency.nrows(),
                    adjacency.ncols(),
                    node_weights.len()
                ),
            });
        }
        for (index, &weight) in node_weights.iter().enumerate() {
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(GraphError::NonpositiveNodeWeight { index, weight });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let weight = adjacency[(i, j)];
                if !(weight >= 0.0) || !weight.is_finite() {
                    return Err(GraphError::NegativeWeight { src: j, dst: i, weight });
                }
            }
        }
        Ok(Self {
            node_weights,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_weights.len()
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn total_weight(&self) -> f64 {
        self.node_weights.iter().sum()
    }

    /// `Σ_j W[i][j]` for every node `i`.
    pub fn in_degrees(&self) -> Vec<f64> {
        self.adjacency.row_iter().map(|r| r.sum()).collect()
    }

    /// `Σ_i W[i][j]` for every node `j`.
    pub fn out_degrees(&self) -> Vec<f64> {
        self.adjacency.column_iter().map(|c| c.sum()).collect()
    }

    /// Edges `src → dst` with positive weight, in row-major order of `W`.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for dst in 0..n {
            for src in 0..n {
                let w = self.adjacency[(dst, src)];
                if w > 0.0 {
                    out.push(Edge::new(src, dst, w));
                }
            }
        }
        out
    }

    /// The graph with adjacency `(W + Wᵀ)/2` and the same node weights.
    pub fn symmetrized(&self) -> DiGraph {
        let w = (&self.adjacency + self.adjacency.transpose()) * 0.5;
        DiGraph {
            node_weights: self.node_weights.clone(),
            adjacency: w,
        }
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> DiGraph {
        let n = self.n_nodes();
        let mut w = DMatrix::zeros(n, n);
        let mut mu = vec![0.0; n];
        for i in 0..n {
            mu[perm[i]] = self.node_weights[i];
            for j in 0..n {
                w[(perm[i], perm[j])] = self.adjacency[(i, j)];
            }
        }
        DiGraph {
            node_weights: mu,
            adjacency: w,
        }
    }

    fn check_signal(&self, x: &CMat) -> Result<(), GraphError> {
        if x.nrows() != self.n_nodes() {
            return Err(GraphError::ShapeMismatch {
                expected: format!("{} rows", self.n_nodes()),
                got: format!("{} rows", x.nrows()),
            });
        }
        Ok(())
    }

    /// `⟨X, Y⟩ = Σ_ij conj(X_ij) Y_ij μ_i`
    pub fn inner(&self, x: &CMat, y: &CMat) -> Result<C64, GraphError> {
        self.check_signal(x)?;
        self.check_signal(y)?;
        if x.ncols() != y.ncols() {
            return Err(GraphError::ShapeMismatch {
                expected: format!("{} columns", x.ncols()),
                got: format!("{} columns", y.ncols()),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.n_nodes() {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..x.ncols() {
                row += x.get(i, j).conj() * y.get(i, j);
            }
            acc += row * self.node_weights[i];
        }
        Ok(acc)
    }

    /// `‖X‖₂ = (Σ_ij |X_ij|² μ_i)^½`
    pub fn norm(&self, x: &CMat) -> Result<f64, GraphError> {
        self.check_signal(x)?;
        Ok(weighted_norm(x, &self.node_weights))
    }

    pub fn operator(&self, kind: OperatorKind) -> CharacteristicOperator {
        CharacteristicOperator::new(Arc::new(self.clone()), kind)
    }
}

/// Weighted Frobenius norm of a signal for arbitrary node weights.
pub fn weighted_norm(x: &CMat, mu: &[f64]) -> f64 {
    let modulus = x.modulus();
    let mut acc = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        acc += modulus.row(i).norm_squared() * m;
    }
    acc.sqrt()
}

/// Convenience wrapper over [`DiGraph::inner`].
pub fn weighted_inner(x: &CMat, y: &CMat, g: &DiGraph) -> Result<C64, GraphError> {
    g.inner(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Adjacency,
    InDegreeLaplacian,
    FaberNetNormalized,
}

impl OperatorKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "adjacency" => Some(Self::Adjacency),
            "in_degree_laplacian" | "laplacian" => Some(Self::InDegreeLaplacian),
            "fabernet_normalized" | "fabernet" | "normalized" => Some(Self::FaberNetNormalized),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Adjacency => "adjacency",
            Self::InDegreeLaplacian => "in_degree_laplacian",
            Self::FaberNetNormalized => "fabernet_normalized",
        };
        f.write_str(s)
    }
}

/// A real matrix derived from a graph, together with the graph it came from.
#[derive(Debug, Clone)]
pub struct CharacteristicOperator {
    kind: OperatorKind,
    matrix: DMatrix<f64>,
    graph: Arc<DiGraph>,
}

impl CharacteristicOperator {
    pub fn new(graph: Arc<DiGraph>, kind: OperatorKind) -> Self {
        let matrix = match kind {
            OperatorKind::Adjacency => graph.adjacency.clone(),
            OperatorKind::InDegreeLaplacian => in_degree_laplacian(&graph),
            OperatorKind::FaberNetNormalized => fabernet_normalized(&graph),
        };
        Self { kind, matrix, graph }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn graph(&self) -> &Arc<DiGraph> {
        &self.graph
    }

    /// Adjoint with respect to the weighted inner product: `M⁻¹ Tᵀ M`.
    /// Equals the plain transpose when all node weights are one.
    pub fn adjoint_matrix(&self) -> DMatrix<f64> {
        weighted_adjoint(&self.matrix, self.graph.node_weights())
    }
}

/// `M⁻¹ Tᵀ M` for a real operator `T`.
pub fn weighted_adjoint(t: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = t.nrows();
    DMatrix::from_fn(n, n, |i, j| t[(j, i)] * mu[j] / mu[i])
}

/// `L_in = M⁻¹ (D_in − W)`
pub fn in_degree_laplacian(g: &DiGraph) -> DMatrix<f64> {
    let n = g.n_nodes();
    let din = g.in_degrees();
    let mut l = -g.adjacency.clone();
    for i in 0..n {
        l[(i, i)] += din[i];
    }
    for i in 0..n {
        let inv = 1.0 / g.node_weights[i];
        l.row_mut(i).scale_mut(inv);
    }
    l
}

/// `(D_in)^(−1/4) W (D_out)^(−1/4)` with `0^(−1/4) := 0`.
pub fn fabernet_normalized(g: &DiGraph) -> DMatrix<f64> {
    let quarter = |d: f64| if d > 0.0 { d.powf(-0.25) } else { 0.0 };
    let din: Vec<f64> = g.in_degrees().into_iter().map(quarter).collect();
    let dout: Vec<f64> = g.out_degrees().into_iter().map(quarter).collect();
    let n = g.n_nodes();
    DMatrix::from_fn(n, n, |i, j| din[i] * g.adjacency[(i, j)] * dout[j])
}
