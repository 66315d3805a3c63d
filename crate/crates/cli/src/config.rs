//! Run configuration: a TOML file with a few flat sections. Every key has a
//! default, unknown keys are rejected, and the resolved form is written back
//! next to the outputs.

use holonet::coarse::DEFAULT_C_GRID;
use holonet::digraph::OperatorKind;
use holonet::holocalc::{FilterBankSpec, DEFAULT_POLE};
use holonet::network::{Loss, ModelConfig, Nonlinearity, OptimizerKind, ReadoutKind, ScalarField, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const OUT_DIR_ENV: &str = "HOLONET_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub graph: GraphSection,
    pub bank: BankSection,
    pub filter: FilterSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub converge: ConvergeSection,
    pub gradcheck: GradcheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            output_dir: PathBuf::from("holonet-out"),
            graph: GraphSection::default(),
            bank: BankSection::default(),
            filter: FilterSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            converge: ConvergeSection::default(),
            gradcheck: GradcheckSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Overrides the sibling `.mu` file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_weights: Option<PathBuf>,
    pub operator: String,
    /// Multiplier of the `high` tier.
    pub scale: f64,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            path: None,
            node_weights: None,
            operator: "adjacency".into(),
            scale: 1.0,
        }
    }
}

/// Same keys as the key-value bank format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankSection {
    pub kind: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_order_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_real: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_imag: Option<f64>,
}

impl Default for BankSection {
    fn default() -> Self {
        Self {
            kind: "faber".into(),
            k: 2,
            gamma: None,
            include_order_zero: None,
            y_real: None,
            y_imag: None,
        }
    }
}

impl BankSection {
    pub fn spec(&self) -> Result<FilterBankSpec, String> {
        let mut text = format!("kind = {}\nK = {}\n", self.kind, self.k);
        let mut push = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                text.push_str(&format!("{key} = {v}\n"));
            }
        };
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("include_order_zero", self.include_order_zero.map(|v| v.to_string()));
        push("y_real", self.y_real.map(|v| v.to_string()));
        push("y_imag", self.y_imag.map(|v| v.to_string()));
        let spec = FilterBankSpec::parse_config(&text).map_err(|e| format!("[bank] {e}"))?;
        spec.validate().map_err(|e| format!("[bank] {e}"))?;
        Ok(spec)
    }

    /// Writes every default explicitly so the echoed config is complete.
    pub fn resolve(&mut self, spec: &FilterBankSpec) {
        match *spec {
            FilterBankSpec::Faber {
                gamma,
                include_order_zero,
                ..
            } => {
                self.gamma = Some(gamma);
                self.include_order_zero = Some(include_order_zero);
            }
            FilterBankSpec::Resolvent { pole, .. } => {
                self.y_real = Some(pole.re);
                self.y_imag = Some(pole.im);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    /// One real coefficient per atom; all ones when empty.
    pub theta: Vec<f64>,
    /// `ones`, `random` or `delta`.
    pub signal: String,
    /// Node carrying the delta signal, in the graph file's numbering.
    pub node: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            theta: Vec::new(),
            signal: "ones".into(),
            node: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub widths: Vec<usize>,
    pub alpha: f64,
    pub field: String,
    pub rho: String,
    /// Defaults to the normalized adjacency for faber banks and the
    /// in-degree Laplacian for resolvent banks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            widths: vec![16, 16],
            alpha: 0.5,
            field: "complex".into(),
            rho: "split_relu".into(),
            operator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// `direction` (node classification) or `two_scale` (graph regression).
    pub task: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    /// Node count of the direction task; node bound of two-scale graphs.
    pub n_nodes: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            task: "direction".into(),
            epochs: 200,
            learning_rate: 0.01,
            optimizer: "adam".into(),
            loss: None,
            n_nodes: 200,
            n_train: 40,
            n_test: 20,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub c_grid: Vec<f64>,
    pub y_real: f64,
    pub y_imag: f64,
    /// `resolvent` for the single gap, `suite` for all four columns.
    pub mode: String,
    pub plot: bool,
    /// Exit with status 1 unless every column strictly decreases.
    pub check: bool,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            c_grid: DEFAULT_C_GRID.to_vec(),
            y_real: DEFAULT_POLE,
            y_imag: 0.0,
            mode: "resolvent".into(),
            plot: false,
            check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    pub tolerance: f64,
    pub n_nodes: usize,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            n_nodes: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskChoice {
    Direction,
    TwoScale,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    /// Checks every section and fills defaults that depend on other keys.
    pub fn resolve(&mut self) -> Result<(), String> {
        if self.threads == 0 {
            return Err("threads must be at least 1".into());
        }
        let spec = self.bank.spec()?;
        self.bank.resolve(&spec);
        self.graph_operator()?;
        if !(self.graph.scale > 0.0 && self.graph.scale.is_finite()) {
            return Err(format!("[graph] scale must be positive, got {}", self.graph.scale));
        }
        if self.model.operator.is_none() {
            self.model.operator = Some(match spec {
                FilterBankSpec::Faber { .. } => OperatorKind::FaberNetNormalized,
                FilterBankSpec::Resolvent { .. } => OperatorKind::InDegreeLaplacian,
            }
            .to_string());
        }
        self.task()?;
        self.model_config(1, ReadoutKind::None)?;
        self.train_config()?;
        match self.converge.mode.as_str() {
            "resolvent" | "suite" => {}
            other => return Err(format!("[converge] mode must be resolvent or suite, got '{other}'")),
        }
        if self.converge.c_grid.is_empty() || self.converge.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err("[converge] c_grid must hold positive scales".into());
        }
        match self.filter.signal.as_str() {
            "ones" | "random" | "delta" => {}
            other => return Err(format!("[filter] signal must be ones, random or delta, got '{other}'")),
        }
        if !(self.gradcheck.tolerance > 0.0) || self.gradcheck.n_nodes < 2 {
            return Err("[gradcheck] needs a positive tolerance and at least 2 nodes".into());
        }
        Ok(())
    }

    pub fn graph_operator(&self) -> Result<OperatorKind, String> {
        OperatorKind::parse(&self.graph.operator).ok_or_else(|| format!("[graph] unknown operator '{}'", self.graph.operator))
    }

    pub fn task(&self) -> Result<TaskChoice, String> {
        match self.train.task.as_str() {
            "direction" => Ok(TaskChoice::Direction),
            "two_scale" => Ok(TaskChoice::TwoScale),
            other => Err(format!("[train] task must be direction or two_scale, got '{other}'")),
        }
    }

    pub fn model_config(&self, input_dim: usize, readout: ReadoutKind) -> Result<ModelConfig, String> {
        let spec = self.bank.spec()?;
        let operator = match &self.model.operator {
            Some(op) => OperatorKind::parse(op).ok_or_else(|| format!("[model] unknown operator '{op}'"))?,
            None => OperatorKind::FaberNetNormalized,
        };
        let cfg = ModelConfig {
            operator,
            forward_bank: spec,
            backward_bank: spec,
            alpha: self.model.alpha,
            rho: Nonlinearity::parse(&self.model.rho).ok_or_else(|| format!("[model] unknown rho '{}'", self.model.rho))?,
            field: ScalarField::parse(&self.model.field)
                .ok_or_else(|| format!("[model] unknown field '{}'", self.model.field))?,
            input_dim,
            widths: self.model.widths.clone(),
            readout,
        };
        cfg.validate().map_err(|e| format!("[model] {e}"))?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig, String> {
        let t = &self.train;
        let loss = match &t.loss {
            Some(l) => Some(Loss::parse(l).ok_or_else(|| format!("[train] unknown loss '{l}'"))?),
            None => None,
        };
        if !(t.learning_rate >= 0.0 && t.learning_rate.is_finite()) {
            return Err(format!("[train] learning_rate must be nonnegative, got {}", t.learning_rate));
        }
        if t.n_nodes < 2 || t.n_train == 0 || t.n_test == 0 {
            return Err("[train] n_nodes must be at least 2 and the splits nonempty".into());
        }
        Ok(TrainConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            optimizer: OptimizerKind::parse(&t.optimizer)
                .ok_or_else(|| format!("[train] unknown optimizer '{}'", t.optimizer))?,
            loss,
        })
    }
}
