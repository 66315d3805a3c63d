//! Reaches, two-scale graphs, limit graphs and the translation operators
//! `J↓`, `J↑` between a graph and its coarse-grained limit.

use crate::cmat::{CMat, C64};
use crate::digraph::{in_degree_laplacian, DiGraph, GraphError};
use crate::holocalc::{resolvent, HoloError};
use nalgebra::DMatrix;
use std::collections::VecDeque;
use thiserror::Error;

/// Scales at which convergence towards the limit graph is sampled by default.
pub const DEFAULT_C_GRID: [f64; 7] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6];
/// Relative tolerance of the in-degree = out-degree check on the high tier.
pub const KIRCHHOFF_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoarseError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Holo(#[from] HoloError),
    #[error("high tier violates in-degree = out-degree at node {node}: in {in_degree}, out {out_degree}")]
    KirchhoffViolated { node: usize, in_degree: f64, out_degree: f64 },
    #[error("edge ({src} -> {dst}) appears in both the regular and the high tier")]
    OverlappingTiers { src: usize, dst: usize },
    #[error("reaches overlap; a limit graph needs a partition of the nodes")]
    OverlappingReaches,
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("shape mismatch: expected {expected} rows, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Inclusion-maximal forward-reachable node sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachPartition {
    reaches: Vec<Vec<usize>>,
    assignment: Option<Vec<usize>>,
}

impl ReachPartition {
    /// Reaches given explicitly; the assignment exists iff they partition
    /// `0..n_nodes`.
    pub fn from_sets(n_nodes: usize, mut reaches: Vec<Vec<usize>>) -> Self {
        for r in &mut reaches {
            r.sort_unstable();
            r.dedup();
        }
        reaches.sort();
        let mut assignment = vec![usize::MAX; n_nodes];
        let mut disjoint = true;
        for (k, r) in reaches.iter().enumerate() {
            for &i in r {
                if i >= n_nodes || assignment[i] != usize::MAX {
                    disjoint = false;
                } else {
                    assignment[i] = k;
                }
            }
        }
        let total = disjoint && assignment.iter().all(|&a| a != usize::MAX);
        Self {
            reaches,
            assignment: total.then_some(assignment),
        }
    }

    pub fn reaches(&self) -> &[Vec<usize>] {
        &self.reaches
    }

    pub fn len(&self) -> usize {
        self.reaches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reaches.is_empty()
    }

    pub fn is_partition(&self) -> bool {
        self.assignment.is_some()
    }

    /// Node → reach index, if the reaches are disjoint.
    pub fn assignment(&self) -> Option<&[usize]> {
        self.assignment.as_deref()
    }
}

/// For every node the set of nodes reachable from it (itself included) along
/// edges of positive weight, reduced to the inclusion-maximal distinct sets.
///
/// Edge `j → i` is `adjacency[(i, j)] > 0`.
pub fn reaches(adjacency: &DMatrix<f64>) -> ReachPartition {
    let n = adjacency.nrows();
    let mut sets: Vec<Vec<bool>> = Vec::with_capacity(n);
    for start in 0..n {
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(j) = queue.pop_front() {
            for i in 0..n {
                if adjacency[(i, j)] > 0.0 && !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        sets.push(seen);
    }
    let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    for (k, s) in sets.iter().enumerate() {
        let dominated = sets.iter().enumerate().any(|(l, t)| {
            l != k && subset(s, t) && (!subset(t, s) || l < k)
        });
        if !dominated {
            maximal.push((0..n).filter(|&i| s[i]).collect());
        }
    }
    ReachPartition::from_sets(n, maximal)
}

/// `W = W_regular + c · W_high` with the high tier balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScaleGraph {
    node_weights: Vec<f64>,
    w_regular: DMatrix<f64>,
    w_high: DMatrix<f64>,
    scale: f64,
}

impl TwoScaleGraph {
    pub fn new(
        w_regular: DMatrix<f64>,
        w_high: DMatrix<f64>,
        node_weights: Vec<f64>,
        scale: f64,
    ) -> Result<Self, CoarseError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CoarseError::InvalidScale(scale));
        }
        // validates shapes, signs and node weights
        DiGraph::from_adjacency(w_regular.clone(), node_weights.clone())?;
        DiGraph::from_adjacency(w_high.clone(), node_weights.clone())?;
        let n = node_weights.len();
        for i in 0..n {
            for j in 0..n {
                if w_regular[(i, j)] > 0.0 && w_high[(i, j)] > 0.0 {
                    return Err(CoarseError::OverlappingTiers { src: j, dst: i });
                }
            }
        }
        for j in 0..n {
            let in_degree = w_high.row(j).sum();
            let out_degree = w_high.column(j).sum();
            if (in_degree - out_degree).abs() > KIRCHHOFF_TOL * in_degree.max(out_degree).max(1.0) {
                return Err(CoarseError::KirchhoffViolated {
                    node: j,
                    in_degree,
                    out_degree,
                });
            }
        }
        Ok(Self {
            node_weights,
            w_regular,
            w_high,
            scale,
        })
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self, CoarseError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CoarseError::InvalidScale(scale));
        }
        Ok(Self { scale, ..self.clone() })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_weights.len()
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn w_regular(&self) -> &DMatrix<f64> {
        &self.w_regular
    }

    pub fn w_high(&self) -> &DMatrix<f64> {
        &self.w_high
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn effective_adjacency(&self) -> DMatrix<f64> {
        &self.w_regular + &self.w_high * self.scale
    }

    pub fn graph(&self) -> DiGraph {
        DiGraph::from_adjacency(self.effective_adjacency(), self.node_weights.clone())
            .expect("validated at construction")
    }

    /// The high tier alone, unscaled.
    pub fn high_graph(&self) -> DiGraph {
        DiGraph::from_adjacency(self.w_high.clone(), self.node_weights.clone()).expect("validated at construction")
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        in_degree_laplacian(&self.graph())
    }
}

/// Coarse-grained graph whose nodes are the reaches of the high tier.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitGraph {
    graph: DiGraph,
    partition: ReachPartition,
    fine_weights: Vec<f64>,
}

impl LimitGraph {
    /// Collapses `graph` along a partition: `W̲_RP = Σ_{r∈R, p∈P} W_rp`,
    /// `μ̲_R = Σ_{r∈R} μ_r`. Intra-reach weight stays as a self-loop.
    pub fn collapse(graph: &DiGraph, partition: ReachPartition) -> Result<Self, CoarseError> {
        let assign = partition.assignment().ok_or(CoarseError::OverlappingReaches)?.to_vec();
        let n = graph.n_nodes();
        if assign.len() != n {
            return Err(CoarseError::ShapeMismatch {
                expected: n,
                got: assign.len(),
            });
        }
        let k = partition.len();
        let mut w = DMatrix::<f64>::zeros(k, k);
        let a = graph.adjacency();
        for i in 0..n {
            for j in 0..n {
                w[(assign[i], assign[j])] += a[(i, j)];
            }
        }
        let mut mu = vec![0.0; k];
        for (i, &m) in graph.node_weights().iter().enumerate() {
            mu[assign[i]] += m;
        }
        Ok(Self {
            graph: DiGraph::from_adjacency(w, mu)?,
            partition,
            fine_weights: graph.node_weights().to_vec(),
        })
    }

    pub fn graph(&self) -> &DiGraph {
        &self.graph
    }

    pub fn partition(&self) -> &ReachPartition {
        &self.partition
    }

    pub fn n_fine(&self) -> usize {
        self.fine_weights.len()
    }

    pub fn n_coarse(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn fine_weights(&self) -> &[f64] {
        &self.fine_weights
    }

    fn assignment(&self) -> &[usize] {
        self.partition.assignment().expect("limit graphs carry a partition")
    }

    /// `J↓` as a `|G̲| × |G|` matrix: `(J↓)_{R,r} = μ_r / μ̲_R` for `r ∈ R`.
    pub fn project_down_matrix(&self) -> DMatrix<f64> {
        let mu_c = self.graph.node_weights();
        let mut j = DMatrix::zeros(self.n_coarse(), self.n_fine());
        for (r, &rr) in self.assignment().iter().enumerate() {
            j[(rr, r)] = self.fine_weights[r] / mu_c[rr];
        }
        j
    }

    /// `J↑` as a `|G| × |G̲|` matrix of reach indicators.
    pub fn interpolate_up_matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n_fine(), self.n_coarse());
        for (r, &rr) in self.assignment().iter().enumerate() {
            j[(r, rr)] = 1.0;
        }
        j
    }

    /// Weighted average over each reach.
    pub fn project_down(&self, x: &CMat) -> Result<CMat, CoarseError> {
        if x.nrows() != self.n_fine() {
            return Err(CoarseError::ShapeMismatch {
                expected: self.n_fine(),
                got: x.nrows(),
            });
        }
        Ok(CMat::from_real(self.project_down_matrix()).matmul(x))
    }

    /// Copies each reach's row to its member nodes.
    pub fn interpolate_up(&self, u: &CMat) -> Result<CMat, CoarseError> {
        if u.nrows() != self.n_coarse() {
            return Err(CoarseError::ShapeMismatch {
                expected: self.n_coarse(),
                got: u.nrows(),
            });
        }
        Ok(u.select_rows(self.assignment()))
    }
}

/// Limit graph of a two-scale graph: reaches of the high tier, aggregation
/// over the full effective adjacency.
pub fn build_limit_graph(g: &TwoScaleGraph) -> Result<LimitGraph, CoarseError> {
    let partition = reaches(g.w_high());
    if !partition.is_partition() {
        return Err(CoarseError::OverlappingReaches);
    }
    LimitGraph::collapse(&g.graph(), partition)
}

/// `‖M_out^{1/2} D M_in^{−1/2}‖₂`, the operator norm of `D` between the
/// weighted spaces.
pub fn weighted_operator_norm(d: &CMat, mu_out: &[f64], mu_in: &[f64]) -> f64 {
    let (rows, cols) = d.shape();
    assert_eq!(rows, mu_out.len(), "row weights");
    assert_eq!(cols, mu_in.len(), "column weights");
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let full = d.to_complex();
    let scaled = DMatrix::<C64>::from_fn(rows, cols, |i, j| full[(i, j)] * (mu_out[i].sqrt() / mu_in[j].sqrt()));
    scaled.singular_values().max()
}

/// `∥R_y(L) − J↑ R_y(L̲) J↓∥` at every scale in `c_grid`.
pub fn resolvent_convergence_gap(
    g: &TwoScaleGraph,
    y: C64,
    c_grid: &[f64],
) -> Result<Vec<(f64, f64)>, CoarseError> {
    filter_convergence_gap(g, y, &[C64::new(1.0, 0.0)], c_grid)
}

/// Same gap for the filter `g_θ(λ) = Σ_k θ_k (λ − y)^{−k}`, `k = 1, …, K`.
pub fn filter_convergence_gap(
    g: &TwoScaleGraph,
    y: C64,
    theta: &[C64],
    c_grid: &[f64],
) -> Result<Vec<(f64, f64)>, CoarseError> {
    c_grid
        .iter()
        .map(|&c| {
            let gc = g.with_scale(c)?;
            let lg = build_limit_graph(&gc)?;
            let fine = resolvent_filter(&gc.laplacian(), y, theta)?;
            let coarse = resolvent_filter(&in_degree_laplacian(lg.graph()), y, theta)?;
            let up = CMat::from_real(lg.interpolate_up_matrix());
            let down = CMat::from_real(lg.project_down_matrix());
            let lifted = up.matmul(&coarse).matmul(&down);
            let gap = weighted_operator_norm(&(&fine - &lifted), gc.node_weights(), gc.node_weights());
            Ok((c, gap))
        })
        .collect()
}

/// `Σ_k θ_k R_y(L)^k`
pub fn resolvent_filter(l: &DMatrix<f64>, y: C64, theta: &[C64]) -> Result<CMat, HoloError> {
    let r = resolvent(l, y)?;
    let n = l.nrows();
    let mut acc = CMat::zeros(n, n);
    let mut power = CMat::identity(n);
    for &t in theta {
        power = power.matmul(&r);
        acc += &power.scale_complex(t);
    }
    Ok(acc)
}
