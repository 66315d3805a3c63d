//! Losses, optimizers, full-batch training and the finite-difference check.

use super::model::{HoloNetModel, ModelOutput, PreparedGraph};
use super::{shape_err, NetworkError};
use crate::cmat::CMat;
use crate::digraph::DiGraph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Softmax cross-entropy over node logits, averaged over labelled nodes.
    CrossEntropy,
    /// Mean absolute error.
    Mae,
    /// Mean squared error.
    Mse,
}

impl Loss {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_entropy" | "ce" => Some(Self::CrossEntropy),
            "mae" => Some(Self::Mae),
            "mse" => Some(Self::Mse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassificationData {
    pub graph: DiGraph,
    pub features: CMat,
    pub labels: Vec<usize>,
    /// Nodes that contribute to the loss; all of them when absent.
    pub train_mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub graph: DiGraph,
    pub features: CMat,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum Task<'a> {
    NodeClassification(&'a NodeClassificationData),
    GraphRegression(&'a [GraphSample]),
}

impl Task<'_> {
    pub fn default_loss(&self) -> Loss {
        match self {
            Self::NodeClassification(_) => Loss::CrossEntropy,
            Self::GraphRegression(_) => Loss::Mae,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" | "gd" => Some(Self::Sgd),
            "adam" => Some(Self::Adam),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Falls back to the task's default loss.
    pub loss: Option<Loss>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            optimizer: OptimizerKind::Adam,
            loss: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Loss before each update, followed by the loss after the last one.
    pub losses: Vec<f64>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one loss value")
    }
}

pub trait Optimizer {
    fn step(&mut self, params: &mut [f64], grads: &[f64]);
}

#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Optimizer for Sgd {
    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= self.learning_rate * g;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(learning_rate: f64, n_params: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Loss value and its derivative with respect to the readout output.
fn loss_terms(loss: Loss, out: &DMatrix<f64>, target: &Target<'_>) -> Result<(f64, DMatrix<f64>), NetworkError> {
    match (loss, target) {
        (Loss::CrossEntropy, Target::Labels { labels, mask }) => {
            let (n, c) = out.shape();
            if labels.len() != n {
                return Err(shape_err("labels", n, labels.len()));
            }
            let active: Vec<usize> = (0..n).filter(|&i| mask.is_none_or(|m| m[i])).collect();
            if active.is_empty() {
                return Err(NetworkError::InvalidConfig("no labelled nodes to train on".into()));
            }
            let scale = 1.0 / active.len() as f64;
            let mut grad = DMatrix::zeros(n, c);
            let mut total = 0.0;
            for &i in &active {
                let y = labels[i];
                if y >= c {
                    return Err(shape_err("label", format!("< {c}"), y));
                }
                let max = out.row(i).max();
                let exps: Vec<f64> = out.row(i).iter().map(|v| (v - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                total += z.ln() + max - out[(i, y)];
                for j in 0..c {
                    grad[(i, j)] = scale * (exps[j] / z - if j == y { 1.0 } else { 0.0 });
                }
            }
            Ok((total * scale, grad))
        }
        (Loss::Mae | Loss::Mse, Target::Values(t)) => {
            if out.shape() != t.shape() {
                return Err(shape_err("target", format!("{:?}", out.shape()), format!("{:?}", t.shape())));
            }
            let count = out.len() as f64;
            let diff = out - *t;
            if loss == Loss::Mae {
                let value = diff.iter().map(|d| d.abs()).sum::<f64>() / count;
                Ok((value, diff.map(|d| d.signum() * (d != 0.0) as u8 as f64 / count)))
            } else {
                let value = diff.iter().map(|d| d * d).sum::<f64>() / count;
                Ok((value, diff.map(|d| 2.0 * d / count)))
            }
        }
        (Loss::CrossEntropy, Target::Values(_)) => Err(NetworkError::InvalidConfig(
            "cross-entropy needs class labels".into(),
        )),
        (_, Target::Labels { .. }) => Err(NetworkError::InvalidConfig(
            "regression losses need real-valued targets".into(),
        )),
    }
}

enum Target<'a> {
    Labels {
        labels: &'a [usize],
        mask: Option<&'a [bool]>,
    },
    Values(&'a DMatrix<f64>),
}

/// A task with its banks built once.
pub(crate) struct PreparedTask {
    items: Vec<(PreparedGraph, CMat, PreparedTarget)>,
}

enum PreparedTarget {
    Labels { labels: Vec<usize>, mask: Option<Vec<bool>> },
    Values(DMatrix<f64>),
}

impl PreparedTarget {
    fn view(&self) -> Target<'_> {
        match self {
            Self::Labels { labels, mask } => Target::Labels {
                labels,
                mask: mask.as_deref(),
            },
            Self::Values(v) => Target::Values(v),
        }
    }
}

impl PreparedTask {
    pub(crate) fn new(model: &HoloNetModel, task: Task<'_>) -> Result<Self, NetworkError> {
        let items = match task {
            Task::NodeClassification(d) => vec![(
                model.prepare(&d.graph)?,
                d.features.clone(),
                PreparedTarget::Labels {
                    labels: d.labels.clone(),
                    mask: d.train_mask.clone(),
                },
            )],
            Task::GraphRegression(samples) => samples
                .par_iter()
                .map(|s| {
                    Ok((
                        model.prepare(&s.graph)?,
                        s.features.clone(),
                        PreparedTarget::Values(DMatrix::from_row_slice(1, s.target.len(), &s.target)),
                    ))
                })
                .collect::<Result<_, NetworkError>>()?,
        };
        Ok(Self { items })
    }

    /// Mean loss over items and its parameter gradients.
    pub(crate) fn loss_and_gradients(&self, model: &HoloNetModel, loss: Loss) -> Result<(f64, Vec<f64>), NetworkError> {
        let scale = 1.0 / self.items.len().max(1) as f64;
        let parts: Vec<(f64, Vec<f64>)> = self
            .items
            .par_iter()
            .map(|(pg, x, target)| {
                let cache = model.forward_cached(pg, x)?;
                let out = model.cache_output(&cache, &pg.node_weights)?;
                let values = out.values().ok_or_else(|| NetworkError::InvalidConfig("training needs a readout".into()))?;
                let (value, grad) = loss_terms(loss, values, &target.view())?;
                let grads = model.backward(pg, &cache, &CMat::from_real(grad))?;
                Ok((value, model.flatten_gradients(&grads)))
            })
            .collect::<Result<_, NetworkError>>()?;
        let mut total = 0.0;
        let mut grad = vec![0.0; model.n_params()];
        for (value, g) in parts {
            total += value * scale;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b * scale;
            }
        }
        Ok((total, grad))
    }

    pub(crate) fn loss(&self, model: &HoloNetModel, loss: Loss) -> Result<f64, NetworkError> {
        let scale = 1.0 / self.items.len().max(1) as f64;
        let values: Vec<f64> = self
            .items
            .par_iter()
            .map(|(pg, x, target)| {
                let out = model.forward(pg, x)?;
                let values = out.values().ok_or_else(|| NetworkError::InvalidConfig("loss needs a readout".into()))?;
                Ok(loss_terms(loss, values, &target.view())?.0)
            })
            .collect::<Result<_, NetworkError>>()?;
        Ok(values.iter().sum::<f64>() * scale)
    }

    fn kink_margin(&self, model: &HoloNetModel) -> Result<f64, NetworkError> {
        let mut margin = f64::INFINITY;
        for (pg, x, _) in &self.items {
            margin = margin.min(model.kink_margin(&model.forward_cached(pg, x)?));
        }
        Ok(margin)
    }
}

/// Full-batch gradient descent with analytic gradients.
pub fn train(model: &mut HoloNetModel, task: Task<'_>, config: &TrainConfig) -> Result<TrainReport, NetworkError> {
    if !(config.learning_rate >= 0.0) || !config.learning_rate.is_finite() {
        return Err(NetworkError::InvalidConfig(format!(
            "learning rate must be nonnegative, got {}",
            config.learning_rate
        )));
    }
    let loss = config.loss.unwrap_or(task.default_loss());
    let prepared = PreparedTask::new(model, task)?;
    let mut params = model.params_flat();
    let mut optimizer: Box<dyn Optimizer> = match config.optimizer {
        OptimizerKind::Sgd => Box::new(Sgd {
            learning_rate: config.learning_rate,
        }),
        OptimizerKind::Adam => Box::new(Adam::new(config.learning_rate, params.len())),
    };
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (value, grad) = prepared.loss_and_gradients(model, loss)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(NetworkError::NonFiniteLoss { epoch });
        }
        losses.push(value);
        if config.learning_rate > 0.0 {
            optimizer.step(&mut params, &grad);
            model.set_params_flat(&params)?;
        }
    }
    let last = prepared.loss(model, loss)?;
    if !last.is_finite() {
        return Err(NetworkError::NonFiniteLoss { epoch: config.epochs });
    }
    losses.push(last);
    Ok(TrainReport { losses })
}

/// Mean loss of `model` on `task`.
pub fn evaluate_loss(model: &HoloNetModel, task: Task<'_>, loss: Loss) -> Result<f64, NetworkError> {
    PreparedTask::new(model, task)?.loss(model, loss)
}

/// Loss and its gradient with respect to `params_flat`, in that order.
pub fn loss_and_gradient(model: &HoloNetModel, task: Task<'_>, loss: Loss) -> Result<(f64, Vec<f64>), NetworkError> {
    PreparedTask::new(model, task)?.loss_and_gradients(model, loss)
}

/// Fraction of nodes (within `mask`, if given) whose arg-max logit is the label.
pub fn node_accuracy(model: &HoloNetModel, data: &NodeClassificationData, mask: Option<&[bool]>) -> Result<f64, NetworkError> {
    let pg = model.prepare(&data.graph)?;
    let out = match model.forward(&pg, &data.features)? {
        ModelOutput::Node(m) => m,
        _ => return Err(NetworkError::InvalidConfig("accuracy needs a node readout".into())),
    };
    let mut hits = 0usize;
    let mut total = 0usize;
    for (i, &y) in data.labels.iter().enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        total += 1;
        let row = out.row(i);
        let pred = (0..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best });
        hits += (pred == y) as usize;
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_relative_error: f64,
    /// Per parameter tensor: `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`.
    pub per_tensor: Vec<(String, f64)>,
    /// Whether inputs were perturbed to move pre-activations off the kinks.
    pub jittered: bool,
}

pub const GRADCHECK_STEP: f64 = 1e-6;
pub const KINK_MARGIN: f64 = 1e-4;

/// Compares analytic gradients against central finite differences for every
/// parameter tensor. Inputs are jittered (deterministically) while any
/// pre-activation sits within [`KINK_MARGIN`] of an activation kink.
pub fn gradcheck(model: &HoloNetModel, task: Task<'_>, loss: Loss) -> Result<GradcheckReport, NetworkError> {
    let mut prepared = PreparedTask::new(model, task)?;
    let mut jittered = false;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a17);
    for attempt in 0..20 {
        if prepared.kink_margin(model)? >= KINK_MARGIN {
            break;
        }
        jittered = true;
        let amp = 1e-2 * (attempt + 1) as f64;
        let mut jitter = |x: &CMat| {
            let mut noise = |m: &DMatrix<f64>| m.map(|v| v + amp * rng.random_range(-1.0..1.0));
            match x.im() {
                Some(im) => {
                    let re = noise(x.re());
                    CMat::from_parts(re, noise(im))
                }
                None => CMat::from_real(noise(x.re())),
            }
        };
        prepared = match task {
            Task::NodeClassification(d) => {
                let moved = NodeClassificationData {
                    features: jitter(&d.features),
                    ..d.clone()
                };
                PreparedTask::new(model, Task::NodeClassification(&moved))?
            }
            Task::GraphRegression(samples) => {
                let moved: Vec<GraphSample> = samples
                    .iter()
                    .map(|g| GraphSample {
                        features: jitter(&g.features),
                        ..g.clone()
                    })
                    .collect();
                PreparedTask::new(model, Task::GraphRegression(&moved))?
            }
        };
    }
    let (_, analytic) = prepared.loss_and_gradients(model, loss)?;
    let base = model.params_flat();
    let mut probe = model.clone();
    let mut numeric = vec![0.0; base.len()];
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + GRADCHECK_STEP;
        probe.set_params_flat(&p)?;
        let plus = prepared.loss(&probe, loss)?;
        p[k] = base[k] - GRADCHECK_STEP;
        probe.set_params_flat(&p)?;
        let minus = prepared.loss(&probe, loss)?;
        numeric[k] = (plus - minus) / (2.0 * GRADCHECK_STEP);
    }
    let mut per_tensor = Vec::new();
    let mut pos = 0;
    let sizes = model.tensor_sizes();
    for ((name, _), size) in model.tensors().into_iter().zip(sizes) {
        let a = &analytic[pos..pos + size];
        let n = &numeric[pos..pos + size];
        let diff = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let norm_n = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = norm_a.max(norm_n);
        per_tensor.push((name, if denom > 0.0 { diff / denom } else { 0.0 }));
        pos += size;
    }
    let max_relative_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradcheckReport {
        max_relative_error,
        per_tensor,
        jittered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{Edge, OperatorKind};
    use crate::network::model::{ModelConfig, ReadoutKind};
    use crate::network::{Nonlinearity, ScalarField};

    fn graph() -> DiGraph {
        let edges = [(0, 1, 1.0), (1, 2, 0.5), (2, 0, 2.0), (2, 3, 1.0), (3, 1, 1.5)];
        let edges: Vec<Edge> = edges.iter().map(|&(s, d, w)| Edge::new(s, d, w)).collect();
        DiGraph::from_edges(4, &edges, Some(&[1.0, 2.0, 1.5, 0.5])).unwrap()
    }

    fn features() -> CMat {
        CMat::from_real(DMatrix::from_fn(4, 2, |i, j| ((i * 2 + j) as f64 * 0.37).sin()))
    }

    #[test]
    fn cross_entropy_gradient_rows_sum_to_zero() {
        let out = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let labels = [1, 2];
        let (value, grad) = loss_terms(Loss::CrossEntropy, &out, &Target::Labels { labels: &labels, mask: None }).unwrap();
        assert!(value > 0.0);
        for i in 0..2 {
            assert!(grad.row(i).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn depth_zero_quadratic_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = ModelConfig::fabernet(2, vec![], ReadoutKind::Graph { outputs: 1 }, 1);
        let model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let samples = vec![GraphSample {
            graph: graph(),
            features: features(),
            target: vec![0.3],
        }];
        let report = gradcheck(&model, Task::GraphRegression(&samples), Loss::Mse).unwrap();
        assert!(report.max_relative_error <= 1e-8, "{report:?}");
    }

    #[test]
    fn complex_resolvent_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cfg = ModelConfig::dir_resolvnet(2, vec![3, 2], ReadoutKind::Node { outputs: 3 }, 2);
        cfg.rho = Nonlinearity::SplitAbs;
        cfg.alpha = 0.3;
        let model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let data = NodeClassificationData {
            graph: graph(),
            features: features(),
            labels: vec![0, 2, 1, 1],
            train_mask: None,
        };
        let report = gradcheck(&model, Task::NodeClassification(&data), Loss::CrossEntropy).unwrap();
        assert!(report.max_relative_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn real_fabernet_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut cfg = ModelConfig::fabernet(2, vec![3, 3], ReadoutKind::Graph { outputs: 2 }, 2);
        cfg.field = ScalarField::Real;
        cfg.operator = OperatorKind::FaberNetNormalized;
        let model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let samples = vec![
            GraphSample {
                graph: graph(),
                features: features(),
                target: vec![0.3, -0.2],
            },
            GraphSample {
                graph: graph().symmetrized(),
                features: features().scale(0.5),
                target: vec![1.0, 0.0],
            },
        ];
        let report = gradcheck(&model, Task::GraphRegression(&samples), Loss::Mse).unwrap();
        assert!(report.max_relative_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ModelConfig::dir_resolvnet(2, vec![2], ReadoutKind::Node { outputs: 2 }, 1);
        let mut model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let before = model.clone();
        let data = NodeClassificationData {
            graph: graph(),
            features: features(),
            labels: vec![0, 1, 1, 0],
            train_mask: None,
        };
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let report = train(&mut model, Task::NodeClassification(&data), &cfg).unwrap();
        assert_eq!(model, before);
        assert_eq!(report.losses.len(), 6);
    }

    #[test]
    fn training_reduces_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ModelConfig::fabernet(2, vec![4], ReadoutKind::Node { outputs: 2 }, 2);
        let mut model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let data = NodeClassificationData {
            graph: graph(),
            features: features(),
            labels: vec![0, 1, 1, 0],
            train_mask: None,
        };
        let report = train(&mut model, Task::NodeClassification(&data), &TrainConfig::default()).unwrap();
        assert!(report.final_loss() < report.initial_loss());
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ModelConfig::fabernet(2, vec![4], ReadoutKind::Graph { outputs: 1 }, 2);
        let mut model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let samples = vec![GraphSample {
            graph: graph(),
            features: features(),
            target: vec![1.0],
        }];
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e200,
            optimizer: OptimizerKind::Sgd,
            loss: Some(Loss::Mse),
        };
        assert!(matches!(
            train(&mut model, Task::GraphRegression(&samples), &cfg),
            Err(NetworkError::NonFiniteLoss { .. })
        ));
    }
}
