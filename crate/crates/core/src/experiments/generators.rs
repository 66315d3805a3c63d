//! Seeded synthetic tasks.

use super::probe::logistic_probe_accuracy;
use super::ExperimentError;
use crate::cmat::CMat;
use crate::coarse::{build_limit_graph, TwoScaleGraph};
use crate::digraph::{in_degree_laplacian, DiGraph};
use crate::holocalc::resolvent;
use crate::network::{GraphSample, NodeClassificationData};
use crate::cmat::C64;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    /// Two halves joined by `degree` random perfect matchings, each edge
    /// pointing from the first half to the second unless flipped with
    /// probability `noise`. A node is labelled 1 iff its out-degree exceeds
    /// its in-degree. Every node has the same total degree, so the
    /// symmetrized graph is regular and carries no label information.
    DirectionParity { degree: usize },
    /// Clusters of one centre and a few satellites tied by balanced
    /// high-weight edges, joined by directed regular edges. The target is
    /// computed on the limit graph only.
    TwoScaleRegression { min_scale: f64, max_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub kind: TaskKind,
    pub n_nodes: usize,
    pub n_graphs: usize,
    pub feature_dim: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    pub fn direction_parity(n_nodes: usize, seed: u64) -> Self {
        Self {
            kind: TaskKind::DirectionParity { degree: 5 },
            n_nodes,
            n_graphs: 1,
            feature_dim: 1,
            noise: 0.1,
            seed,
        }
    }

    pub fn two_scale_regression(n_graphs: usize, seed: u64) -> Self {
        Self {
            kind: TaskKind::TwoScaleRegression {
                min_scale: 1e2,
                max_scale: 1e4,
            },
            n_nodes: 24,
            n_graphs,
            feature_dim: 2,
            noise: 0.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionInstance {
    pub data: NodeClassificationData,
    /// Logistic-regression training accuracy on the symmetrized degree.
    pub symmetric_probe: f64,
    /// Logistic-regression training accuracy on (in-degree, out-degree).
    pub directed_probe: f64,
}

pub fn gen_direction_task(spec: &SyntheticTaskSpec) -> Result<Vec<DirectionInstance>, ExperimentError> {
    let TaskKind::DirectionParity { degree } = spec.kind else {
        return Err(ExperimentError::InvalidSpec("expected a direction-parity spec".into()));
    };
    if spec.n_nodes < 2 || spec.n_nodes % 2 != 0 {
        return Err(ExperimentError::InvalidSpec(format!(
            "direction parity needs an even node count, got {}",
            spec.n_nodes
        )));
    }
    if degree == 0 || degree % 2 == 0 {
        return Err(ExperimentError::InvalidSpec(format!(
            "degree must be odd so that no node ties, got {degree}"
        )));
    }
    if !(0.0..=0.5).contains(&spec.noise) || spec.feature_dim == 0 {
        return Err(ExperimentError::InvalidSpec("noise must lie in [0, 0.5] and features be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_graphs.max(1))
        .map(|_| direction_instance(spec, degree, &mut rng))
        .collect()
}

fn direction_instance(spec: &SyntheticTaskSpec, degree: usize, rng: &mut ChaCha8Rng) -> Result<DirectionInstance, ExperimentError> {
    let n = spec.n_nodes;
    let half = n / 2;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for _ in 0..degree {
        let mut partner: Vec<usize> = (half..n).collect();
        partner.shuffle(rng);
        for (a, &b) in partner.iter().enumerate() {
            if rng.random::<f64>() < spec.noise {
                w[(a, b)] += 1.0;
            } else {
                w[(b, a)] += 1.0;
            }
        }
    }
    let graph = DiGraph::from_adjacency(w, vec![1.0; n])?;
    let din = graph.in_degrees();
    let dout = graph.out_degrees();
    let labels: Vec<usize> = (0..n).map(|i| (dout[i] > din[i]) as usize).collect();
    let sym: Vec<Vec<f64>> = (0..n).map(|i| vec![din[i] + dout[i]]).collect();
    let dir: Vec<Vec<f64>> = (0..n).map(|i| vec![din[i], dout[i]]).collect();
    let symmetric_probe = logistic_probe_accuracy(&sym, &labels);
    let directed_probe = logistic_probe_accuracy(&dir, &labels);
    Ok(DirectionInstance {
        data: NodeClassificationData {
            graph,
            features: CMat::from_real(DMatrix::from_element(n, spec.feature_dim, 1.0)),
            labels,
            train_mask: None,
        },
        symmetric_probe,
        directed_probe,
    })
}

/// Node roles in a cluster graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Centre,
    Satellite,
}

pub const CENTRE_WEIGHT: f64 = 6.0;
pub const SATELLITE_WEIGHT: f64 = 1.0;

/// Random cluster graph with at most `max_nodes` nodes: balanced high-weight
/// stars (and, for larger clusters, a directed satellite cycle) inside each
/// cluster and directed regular edges between clusters.
pub fn random_cluster_graph<R: Rng + ?Sized>(
    rng: &mut R,
    max_nodes: usize,
    scale: f64,
) -> Result<(TwoScaleGraph, Vec<NodeRole>), ExperimentError> {
    if max_nodes < 4 {
        return Err(ExperimentError::InvalidSpec("cluster graphs need at least 4 nodes".into()));
    }
    let mut roles = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let target_clusters = rng.random_range(2..=(max_nodes / 4).clamp(2, 6));
    for _ in 0..target_clusters {
        let satellites = rng.random_range(1..=4usize);
        if roles.len() + 1 + satellites > max_nodes {
            break;
        }
        let mut members = vec![roles.len()];
        roles.push(NodeRole::Centre);
        for _ in 0..satellites {
            members.push(roles.len());
            roles.push(NodeRole::Satellite);
        }
        clusters.push(members);
    }
    let n = roles.len();
    let mut high = DMatrix::<f64>::zeros(n, n);
    for members in &clusters {
        let centre = members[0];
        for &s in &members[1..] {
            let w = rng.random_range(0.5..2.0);
            high[(s, centre)] = w;
            high[(centre, s)] = w;
        }
        if members.len() >= 4 {
            let sats = &members[1..];
            let w = rng.random_range(0.5..2.0);
            for k in 0..sats.len() {
                high[(sats[(k + 1) % sats.len()], sats[k])] += w;
            }
        }
    }
    let mut regular = DMatrix::<f64>::zeros(n, n);
    for a in 0..clusters.len() {
        for b in 0..clusters.len() {
            if a != b && rng.random::<f64>() < 0.5 {
                let src = clusters[a][rng.random_range(0..clusters[a].len())];
                let dst = clusters[b][rng.random_range(0..clusters[b].len())];
                regular[(dst, src)] += rng.random_range(0.5..1.5);
            }
        }
    }
    // keep the cluster graph weakly connected through a directed chain
    for a in 1..clusters.len() {
        let src = clusters[a - 1][0];
        let dst = clusters[a][clusters[a].len() - 1];
        if regular[(dst, src)] == 0.0 {
            regular[(dst, src)] = 1.0;
        }
    }
    let mu = roles
        .iter()
        .map(|r| match r {
            NodeRole::Centre => CENTRE_WEIGHT,
            NodeRole::Satellite => SATELLITE_WEIGHT,
        })
        .collect();
    Ok((TwoScaleGraph::new(regular, high, mu, scale)?, roles))
}

/// One-hot role features: satellites `(1, 0)`, centres `(0, 1)`.
pub fn role_features(roles: &[NodeRole]) -> CMat {
    CMat::from_real(DMatrix::from_fn(roles.len(), 2, |i, j| match (roles[i], j) {
        (NodeRole::Satellite, 0) | (NodeRole::Centre, 1) => 1.0,
        _ => 0.0,
    }))
}

/// Mixing of the two role channels inside the target.
const TARGET_MIX: [f64; 2] = [1.0, 0.5];

/// `Σ_R μ̲_R ((L̲ + Id)⁻² J↓X v)_R` on the limit graph.
pub fn limit_target(limit: &DiGraph, coarse_features: &CMat) -> Result<f64, ExperimentError> {
    let r = resolvent(&in_degree_laplacian(limit), C64::new(-1.0, 0.0))?;
    let r2 = r.matmul(&r);
    let v = CMat::from_real(DMatrix::from_column_slice(2, 1, &TARGET_MIX));
    let z = r2.matmul(&coarse_features.matmul(&v));
    Ok(limit
        .node_weights()
        .iter()
        .enumerate()
        .map(|(i, m)| m * z.get(i, 0).re)
        .sum())
}

/// A fine two-scale graph with its collapsed counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScaleSample {
    pub two_scale: TwoScaleGraph,
    pub fine: GraphSample,
    pub coarse: GraphSample,
}

pub fn gen_two_scale_regression(spec: &SyntheticTaskSpec) -> Result<Vec<TwoScaleSample>, ExperimentError> {
    let TaskKind::TwoScaleRegression { min_scale, max_scale } = spec.kind else {
        return Err(ExperimentError::InvalidSpec("expected a two-scale regression spec".into()));
    };
    if !(min_scale > 0.0 && max_scale >= min_scale) {
        return Err(ExperimentError::InvalidSpec("scale range must be positive and ordered".into()));
    }
    if spec.feature_dim != 2 {
        return Err(ExperimentError::InvalidSpec("two-scale regression uses two role features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_graphs)
        .map(|_| {
            let log_c = rng.random_range(min_scale.ln()..=max_scale.ln());
            let (g, roles) = random_cluster_graph(&mut rng, spec.n_nodes, log_c.exp())?;
            two_scale_sample(g, role_features(&roles), spec.noise, &mut rng)
        })
        .collect()
}

/// Pairs a fine graph with its limit; the target comes from the limit.
pub fn two_scale_sample<R: Rng + ?Sized>(
    g: TwoScaleGraph,
    features: CMat,
    noise: f64,
    rng: &mut R,
) -> Result<TwoScaleSample, ExperimentError> {
    let lg = build_limit_graph(&g)?;
    let coarse_x = lg.project_down(&features)?;
    let target = limit_target(lg.graph(), &coarse_x)? + noise * rng.random_range(-1.0..1.0);
    Ok(TwoScaleSample {
        fine: GraphSample {
            graph: g.graph(),
            features,
            target: vec![target],
        },
        coarse: GraphSample {
            graph: lg.graph().clone(),
            features: coarse_x,
            target: vec![target],
        },
        two_scale: g,
    })
}

/// A fixed regular tier swept through scales `c = 1/δ` for deflections `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionFamily {
    base: TwoScaleGraph,
    deflections: Vec<f64>,
    scales: Vec<f64>,
}

impl DeflectionFamily {
    pub fn new(base: TwoScaleGraph, deflections: Vec<f64>) -> Result<Self, ExperimentError> {
        let scales = deflections.iter().map(|d| 1.0 / d).collect();
        Self::checked(base, deflections, scales)
    }

    /// Deflections matching the given scales, which are kept exactly.
    pub fn from_scales(base: TwoScaleGraph, scales: &[f64]) -> Result<Self, ExperimentError> {
        Self::checked(base, scales.iter().map(|c| 1.0 / c).collect(), scales.to_vec())
    }

    fn checked(base: TwoScaleGraph, deflections: Vec<f64>, scales: Vec<f64>) -> Result<Self, ExperimentError> {
        if deflections.is_empty() || deflections.iter().chain(&scales).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(ExperimentError::InvalidSpec("deflections must be positive and finite".into()));
        }
        Ok(Self {
            base,
            deflections,
            scales,
        })
    }

    pub fn base(&self) -> &TwoScaleGraph {
        &self.base
    }

    pub fn deflections(&self) -> &[f64] {
        &self.deflections
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn members(&self) -> Result<Vec<TwoScaleGraph>, ExperimentError> {
        self.scales.iter().map(|&c| Ok(self.base.with_scale(c)?)).collect()
    }
}
