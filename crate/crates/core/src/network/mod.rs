//! HoloNet layers, model assembly, backpropagation and training.
//!
//! One layer computes
//!
//! ```text
//! X' = ρ( α Σ_i Ψᶠ_i(T) X Wᶠ_i + (1 − α) Σ_i Ψᵇ_i(T*) X Wᵇ_i + 𝟙 b )
//! ```
//!
//! with `T*` the adjoint in the node-weighted inner product and the bias `b`
//! a single row broadcast to every node.

mod checkpoint;
mod expand;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use expand::expand_complex_to_real;
pub use model::{
    layer_forward, Gradients, HoloNetModel, LayerParams, ModelConfig, ModelOutput, PreparedGraph, ReadoutKind,
};
pub use train::{
    evaluate_loss, gradcheck, loss_and_gradient, node_accuracy, train, Adam, GradcheckReport, GraphSample, Loss,
    NodeClassificationData, Optimizer, OptimizerKind, Sgd, Task, TrainConfig, TrainReport, GRADCHECK_STEP,
    KINK_MARGIN,
};

use crate::cmat::CMat;
use crate::digraph::GraphError;
use crate::holocalc::HoloError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Holo(#[from] HoloError),
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: String,
        got: String,
    },
    #[error("expansion needs purely real filter banks")]
    NonRealBank,
    #[error("model cannot be expanded exactly: {0}")]
    NotExpressible(String),
    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub(crate) fn shape_err(context: &str, expected: impl fmt::Display, got: impl fmt::Display) -> NetworkError {
    NetworkError::ShapeMismatch {
        context: context.to_string(),
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Some(Self::Real),
            "complex" => Some(Self::Complex),
            _ => None,
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Complex => "complex",
        })
    }
}

/// Activation applied separately to real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `ReLU(a) + i ReLU(b)`
    SplitRelu,
    /// `|a| + i |b|`
    SplitAbs,
}

impl Nonlinearity {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "split_relu" | "relu" => Some(Self::SplitRelu),
            "split_abs" | "abs" => Some(Self::SplitAbs),
            _ => None,
        }
    }

    pub fn apply_scalar(self, a: f64) -> f64 {
        match self {
            Self::SplitRelu => a.max(0.0),
            Self::SplitAbs => a.abs(),
        }
    }

    /// Derivative with the subgradient at zero taken as zero.
    pub fn derivative_scalar(self, a: f64) -> f64 {
        match self {
            Self::SplitRelu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SplitAbs => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply(self, z: &CMat) -> CMat {
        z.map_planes(|a| self.apply_scalar(a))
    }

    /// Gradient through the activation: each plane of `grad` is multiplied
    /// by the derivative at the matching plane of `pre`.
    pub fn backprop(self, pre: &CMat, grad: &CMat) -> CMat {
        let d = |p: &DMatrix<f64>, g: &DMatrix<f64>| p.zip_map(g, |a, b| self.derivative_scalar(a) * b);
        let re = d(pre.re(), grad.re());
        match (pre.im(), grad.im()) {
            (Some(p), Some(g)) => CMat::from_parts(re, d(p, g)),
            _ => CMat::from_real(re),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SplitRelu => "split_relu",
            Self::SplitAbs => "split_abs",
        })
    }
}

/// `Ω(X)_j = Σ_i |X_ij| μ_i`
pub fn aggregate(x: &CMat, mu: &[f64]) -> Result<Vec<f64>, NetworkError> {
    if x.nrows() != mu.len() {
        return Err(shape_err("aggregate", format!("{} rows", mu.len()), format!("{} rows", x.nrows())));
    }
    let m = x.modulus();
    Ok((0..x.ncols())
        .map(|j| (0..x.nrows()).map(|i| m[(i, j)] * mu[i]).sum())
        .collect())
}
