use super::{aggregate, shape_err, NetworkError, Nonlinearity, ScalarField};
use crate::cmat::CMat;
use crate::digraph::{DiGraph, OperatorKind};
use crate::holocalc::{FilterBankSpec, PrecomputedBank};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What follows the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReadoutKind {
    /// Raw complex node features.
    None,
    /// Real affine map on `[Re X | Im X]`, one output row per node.
    Node { outputs: usize },
    /// Real affine map on `Ω(X)`, one output row per graph.
    Graph { outputs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub operator: OperatorKind,
    pub forward_bank: FilterBankSpec,
    pub backward_bank: FilterBankSpec,
    pub alpha: f64,
    pub rho: Nonlinearity,
    pub field: ScalarField,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub readout: ReadoutKind,
}

impl ModelConfig {
    /// Faber banks on the normalized adjacency.
    pub fn fabernet(input_dim: usize, widths: Vec<usize>, readout: ReadoutKind, max_order: usize) -> Self {
        Self {
            operator: OperatorKind::FaberNetNormalized,
            forward_bank: FilterBankSpec::faber(max_order),
            backward_bank: FilterBankSpec::faber(max_order),
            alpha: 0.5,
            rho: Nonlinearity::SplitRelu,
            field: ScalarField::Complex,
            input_dim,
            widths,
            readout,
        }
    }

    /// Resolvent banks on the in-degree Laplacian. Powers start at one.
    pub fn dir_resolvnet(input_dim: usize, widths: Vec<usize>, readout: ReadoutKind, max_power: usize) -> Self {
        Self {
            operator: OperatorKind::InDegreeLaplacian,
            forward_bank: FilterBankSpec::resolvent(max_power),
            backward_bank: FilterBankSpec::resolvent(max_power),
            alpha: 0.5,
            rho: Nonlinearity::SplitRelu,
            field: ScalarField::Complex,
            input_dim,
            widths,
            readout,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        self.forward_bank.validate()?;
        self.backward_bank.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(NetworkError::InvalidConfig(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.input_dim == 0 || self.widths.contains(&0) {
            return Err(NetworkError::InvalidConfig("feature widths must be positive".into()));
        }
        match self.readout {
            ReadoutKind::Node { outputs: 0 } | ReadoutKind::Graph { outputs: 0 } => {
                return Err(NetworkError::InvalidConfig("readout needs at least one output".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Width of the features entering the readout.
    pub fn final_width(&self) -> usize {
        self.widths.last().copied().unwrap_or(self.input_dim)
    }

    fn readout_shape(&self) -> Option<(usize, usize)> {
        match self.readout {
            ReadoutKind::None => None,
            ReadoutKind::Node { outputs } => Some((2 * self.final_width(), outputs)),
            ReadoutKind::Graph { outputs } => Some((self.final_width(), outputs)),
        }
    }
}

/// Weights of one layer. The bias is stored as a single `1 × F` row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_fwd: Vec<CMat>,
    pub w_bwd: Vec<CMat>,
    pub bias: CMat,
}

impl LayerParams {
    pub fn zeros(f_in: usize, f_out: usize, n_fwd: usize, n_bwd: usize) -> Self {
        Self {
            w_fwd: vec![CMat::zeros(f_in, f_out); n_fwd],
            w_bwd: vec![CMat::zeros(f_in, f_out); n_bwd],
            bias: CMat::zeros(1, f_out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.bias_template().0
    }

    pub fn out_dim(&self) -> usize {
        self.bias.ncols()
    }

    fn bias_template(&self) -> (usize, usize) {
        self.w_fwd
            .first()
            .or(self.w_bwd.first())
            .map(|w| w.shape())
            .unwrap_or((0, self.bias.ncols()))
    }
}

/// Forward and backward filter banks of one graph.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub forward: PrecomputedBank,
    pub backward: PrecomputedBank,
    pub node_weights: Vec<f64>,
}

impl PreparedGraph {
    pub fn new(
        graph: &DiGraph,
        operator: OperatorKind,
        forward_bank: FilterBankSpec,
        backward_bank: FilterBankSpec,
    ) -> Result<Self, NetworkError> {
        let op = graph.operator(operator);
        Ok(Self {
            forward: PrecomputedBank::forward(&op, forward_bank)?,
            backward: PrecomputedBank::backward(&op, backward_bank)?,
            node_weights: graph.node_weights().to_vec(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_weights.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelOutput {
    Features(CMat),
    Node(DMatrix<f64>),
    Graph(DMatrix<f64>),
}

impl ModelOutput {
    /// Real outputs of a readout; `None` for raw features.
    pub fn values(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Features(_) => None,
            Self::Node(m) | Self::Graph(m) => Some(m),
        }
    }
}

/// Parameter gradients in the order of [`HoloNetModel::tensors`], using the
/// convention `G = ∂L/∂Re + i ∂L/∂Im`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<CMat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoloNetModel {
    config: ModelConfig,
    layers: Vec<LayerParams>,
    readout_weight: Option<CMat>,
    readout_bias: Option<CMat>,
}

pub(crate) struct ForwardCache {
    inputs: Vec<CMat>,
    pres: Vec<CMat>,
    last: CMat,
}

/// Pre-activation of one layer.
fn layer_pre(
    x: &CMat,
    p: &LayerParams,
    fwd: &PrecomputedBank,
    bwd: &PrecomputedBank,
    alpha: f64,
) -> Result<CMat, NetworkError> {
    let n = x.nrows();
    if fwd.n_nodes() != n || bwd.n_nodes() != n {
        return Err(shape_err("layer input", format!("{} rows", fwd.n_nodes()), format!("{n} rows")));
    }
    if p.w_fwd.len() != fwd.len() || p.w_bwd.len() != bwd.len() {
        return Err(shape_err(
            "filter weights",
            format!("{} forward and {} backward atoms", fwd.len(), bwd.len()),
            format!("{} and {}", p.w_fwd.len(), p.w_bwd.len()),
        ));
    }
    for w in p.w_fwd.iter().chain(&p.w_bwd) {
        if w.nrows() != x.ncols() || w.ncols() != p.out_dim() {
            return Err(shape_err(
                "filter weights",
                format!("{}x{}", x.ncols(), p.out_dim()),
                format!("{}x{}", w.nrows(), w.ncols()),
            ));
        }
    }
    let mut z = p.bias.broadcast_row(n);
    for (branch, weights, scale) in [(fwd, &p.w_fwd, alpha), (bwd, &p.w_bwd, 1.0 - alpha)] {
        if scale == 0.0 {
            continue;
        }
        for (atom, w) in branch.atoms().iter().zip(weights) {
            z.axpy(scale, &atom.matmul(&x.matmul(w)));
        }
    }
    Ok(z)
}

/// One HoloNet layer applied to `x`.
pub fn layer_forward(
    x: &CMat,
    p: &LayerParams,
    fwd: &PrecomputedBank,
    bwd: &PrecomputedBank,
    alpha: f64,
    rho: Nonlinearity,
) -> Result<CMat, NetworkError> {
    Ok(rho.apply(&layer_pre(x, p, fwd, bwd, alpha)?))
}

impl HoloNetModel {
    /// Uniform initialization in `[−s, s]`, `s = (fan_in · atoms)^(−1/2)`.
    /// Complex weights draw real and imaginary parts independently; biases
    /// start at zero.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self, NetworkError> {
        config.validate()?;
        let n_f = config.forward_bank.atom_count();
        let n_b = config.backward_bank.atom_count();
        let complex = config.field == ScalarField::Complex;
        let mut draw = |rows: usize, cols: usize, s: f64, complex: bool| {
            let re = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-s..=s));
            if complex {
                let im = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-s..=s));
                CMat::from_parts(re, im)
            } else {
                CMat::from_real(re)
            }
        };
        let mut layers = Vec::with_capacity(config.depth());
        let mut f_in = config.input_dim;
        for &f_out in &config.widths {
            let s = ((f_in * (n_f + n_b)) as f64).powf(-0.5);
            let w_fwd = (0..n_f).map(|_| draw(f_in, f_out, s, complex)).collect();
            let w_bwd = (0..n_b).map(|_| draw(f_in, f_out, s, complex)).collect();
            let bias = if complex {
                CMat::from_parts(DMatrix::zeros(1, f_out), DMatrix::zeros(1, f_out))
            } else {
                CMat::zeros(1, f_out)
            };
            layers.push(LayerParams { w_fwd, w_bwd, bias });
            f_in = f_out;
        }
        let (readout_weight, readout_bias) = match config.readout_shape() {
            Some((rows, cols)) => {
                let s = (rows as f64).powf(-0.5);
                (Some(draw(rows, cols, s, false)), Some(CMat::zeros(1, cols)))
            }
            None => (None, None),
        };
        Ok(Self {
            config,
            layers,
            readout_weight,
            readout_bias,
        })
    }

    /// Assembles a model from explicit parameters.
    pub fn from_parts(
        config: ModelConfig,
        layers: Vec<LayerParams>,
        readout: Option<(CMat, CMat)>,
    ) -> Result<Self, NetworkError> {
        config.validate()?;
        let mut model = Self {
            config,
            layers,
            readout_weight: None,
            readout_bias: None,
        };
        if let Some((w, b)) = readout {
            model.readout_weight = Some(w);
            model.readout_bias = Some(b);
        }
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<(), NetworkError> {
        let cfg = &self.config;
        if self.layers.len() != cfg.depth() {
            return Err(shape_err("layers", cfg.depth(), self.layers.len()));
        }
        let n_f = cfg.forward_bank.atom_count();
        let n_b = cfg.backward_bank.atom_count();
        let mut f_in = cfg.input_dim;
        for (l, (p, &f_out)) in self.layers.iter().zip(&cfg.widths).enumerate() {
            let ctx = format!("layer {l}");
            if p.w_fwd.len() != n_f || p.w_bwd.len() != n_b {
                return Err(shape_err(&ctx, format!("{n_f}+{n_b} atoms"), format!("{}+{}", p.w_fwd.len(), p.w_bwd.len())));
            }
            for w in p.w_fwd.iter().chain(&p.w_bwd) {
                if w.shape() != (f_in, f_out) {
                    return Err(shape_err(&ctx, format!("{f_in}x{f_out}"), format!("{:?}", w.shape())));
                }
            }
            if p.bias.shape() != (1, f_out) {
                return Err(shape_err(&ctx, format!("1x{f_out} bias"), format!("{:?}", p.bias.shape())));
            }
            if cfg.field == ScalarField::Real && self.layer_tensors(p).any(|t| !t.is_real()) {
                return Err(NetworkError::InvalidConfig(format!("{ctx} has imaginary parts in a real model")));
            }
            f_in = f_out;
        }
        match (cfg.readout_shape(), &self.readout_weight, &self.readout_bias) {
            (None, None, None) => Ok(()),
            (Some((r, c)), Some(w), Some(b)) if w.shape() == (r, c) && b.shape() == (1, c) => Ok(()),
            (expected, w, _) => Err(shape_err(
                "readout",
                format!("{expected:?}"),
                format!("{:?}", w.as_ref().map(|w| w.shape())),
            )),
        }
    }

    fn layer_tensors<'a>(&self, p: &'a LayerParams) -> impl Iterator<Item = &'a CMat> {
        p.w_fwd.iter().chain(&p.w_bwd).chain(std::iter::once(&p.bias))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn readout(&self) -> Option<(&CMat, &CMat)> {
        self.readout_weight.as_ref().zip(self.readout_bias.as_ref())
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), NetworkError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(NetworkError::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        self.config.alpha = alpha;
        Ok(())
    }

    /// Banks of `graph` for this model's operator and bank specs.
    pub fn prepare(&self, graph: &DiGraph) -> Result<PreparedGraph, NetworkError> {
        PreparedGraph::new(
            graph,
            self.config.operator,
            self.config.forward_bank,
            self.config.backward_bank,
        )
    }

    /// Parameter tensors in canonical order: per layer the forward weights,
    /// backward weights and bias, then readout weight and bias.
    pub fn tensors(&self) -> Vec<(String, &CMat)> {
        let mut out = Vec::new();
        for (l, p) in self.layers.iter().enumerate() {
            for (i, w) in p.w_fwd.iter().enumerate() {
                out.push((format!("layer{l}.fwd{i}"), w));
            }
            for (i, w) in p.w_bwd.iter().enumerate() {
                out.push((format!("layer{l}.bwd{i}"), w));
            }
            out.push((format!("layer{l}.bias"), &p.bias));
        }
        if let Some((w, b)) = self.readout() {
            out.push(("readout.weight".into(), w));
            out.push(("readout.bias".into(), b));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut CMat> {
        let mut out: Vec<&mut CMat> = Vec::new();
        for p in &mut self.layers {
            out.extend(p.w_fwd.iter_mut());
            out.extend(p.w_bwd.iter_mut());
            out.push(&mut p.bias);
        }
        if let Some(w) = self.readout_weight.as_mut() {
            out.push(w);
        }
        if let Some(b) = self.readout_bias.as_mut() {
            out.push(b);
        }
        out
    }

    /// Whether tensor `index` carries an imaginary plane as a parameter.
    fn tensor_is_complex(&self, index: usize) -> bool {
        let readout_start = self.tensors_len() - if self.readout_weight.is_some() { 2 } else { 0 };
        self.config.field == ScalarField::Complex && index < readout_start
    }

    fn tensors_len(&self) -> usize {
        let per_layer = self.config.forward_bank.atom_count() + self.config.backward_bank.atom_count() + 1;
        per_layer * self.layers.len() + if self.readout_weight.is_some() { 2 } else { 0 }
    }

    /// Real parameters as a flat vector: each tensor's real plane in
    /// column-major order, followed by its imaginary plane when complex.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (k, (_, t)) in self.tensors().into_iter().enumerate() {
            out.extend(t.re().iter());
            if self.tensor_is_complex(k) {
                out.extend(t.im_or_zeros().iter());
            }
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensor_sizes().iter().sum()
    }

    /// Length of each tensor's stretch of the flat parameter vector.
    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.tensors()
            .iter()
            .enumerate()
            .map(|(k, (_, t))| t.nrows() * t.ncols() * if self.tensor_is_complex(k) { 2 } else { 1 })
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<(), NetworkError> {
        if flat.len() != self.n_params() {
            return Err(shape_err("parameter vector", self.n_params(), flat.len()));
        }
        let complex: Vec<bool> = (0..self.tensors_len()).map(|k| self.tensor_is_complex(k)).collect();
        let mut pos = 0;
        for (t, is_complex) in self.tensors_mut().into_iter().zip(complex) {
            let (r, c) = t.shape();
            let re = DMatrix::from_column_slice(r, c, &flat[pos..pos + r * c]);
            pos += r * c;
            *t = if is_complex {
                let im = DMatrix::from_column_slice(r, c, &flat[pos..pos + r * c]);
                pos += r * c;
                CMat::from_parts(re, im)
            } else {
                CMat::from_real(re)
            };
        }
        Ok(())
    }

    /// Flattens gradients in the layout of [`HoloNetModel::params_flat`].
    pub fn flatten_gradients(&self, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (k, g) in grads.tensors.iter().enumerate() {
            out.extend(g.re().iter());
            if self.tensor_is_complex(k) {
                out.extend(g.im_or_zeros().iter());
            }
        }
        out
    }

    fn check_input(&self, pg: &PreparedGraph, x: &CMat) -> Result<(), NetworkError> {
        if x.ncols() != self.config.input_dim {
            return Err(shape_err("input features", format!("{} columns", self.config.input_dim), x.ncols()));
        }
        if x.nrows() != pg.n_nodes() {
            return Err(shape_err("input features", format!("{} rows", pg.n_nodes()), x.nrows()));
        }
        if pg.forward.spec() != &self.config.forward_bank || pg.backward.spec() != &self.config.backward_bank {
            return Err(NetworkError::InvalidConfig("graph was prepared with different filter banks".into()));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, pg: &PreparedGraph, x: &CMat) -> Result<ForwardCache, NetworkError> {
        self.check_input(pg, x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for p in &self.layers {
            let z = layer_pre(&h, p, &pg.forward, &pg.backward, self.config.alpha)?;
            let next = self.config.rho.apply(&z);
            inputs.push(h);
            pres.push(z);
            h = next;
        }
        Ok(ForwardCache { inputs, pres, last: h })
    }

    /// Node features after the last layer.
    pub fn features(&self, pg: &PreparedGraph, x: &CMat) -> Result<CMat, NetworkError> {
        Ok(self.forward_cached(pg, x)?.last)
    }

    pub fn forward(&self, pg: &PreparedGraph, x: &CMat) -> Result<ModelOutput, NetworkError> {
        let last = self.features(pg, x)?;
        self.readout_forward(&last, &pg.node_weights)
    }

    fn readout_forward(&self, last: &CMat, mu: &[f64]) -> Result<ModelOutput, NetworkError> {
        let Some((w, b)) = self.readout() else {
            return Ok(ModelOutput::Features(last.clone()));
        };
        Ok(match self.config.readout {
            ReadoutKind::Node { .. } => {
                let s = last.stack_columns();
                ModelOutput::Node(&s * w.re() + b.broadcast_row(s.nrows()).re())
            }
            ReadoutKind::Graph { .. } => {
                let omega = DMatrix::from_row_slice(1, last.ncols(), &aggregate(last, mu)?);
                ModelOutput::Graph(&omega * w.re() + b.re())
            }
            ReadoutKind::None => unreachable!("readout parameters imply a readout kind"),
        })
    }

    /// Gradients of a loss whose derivative with respect to the model output
    /// is `grad_out` (real readout outputs, or complex features without a
    /// readout).
    pub(crate) fn backward(
        &self,
        pg: &PreparedGraph,
        cache: &ForwardCache,
        grad_out: &CMat,
    ) -> Result<Gradients, NetworkError> {
        let mut readout_grads = Vec::new();
        let mut g = match (self.config.readout, self.readout()) {
            (ReadoutKind::Node { .. }, Some((w, _))) => {
                let gy = grad_out.re();
                let s = cache.last.stack_columns();
                readout_grads.push(CMat::from_real(s.transpose() * gy));
                readout_grads.push(CMat::from_real(gy.clone()).column_sums());
                CMat::unstack_columns(&(gy * w.re().transpose()))
            }
            (ReadoutKind::Graph { .. }, Some((w, _))) => {
                let gy = grad_out.re();
                let mu = &pg.node_weights;
                let x = &cache.last;
                let omega = DMatrix::from_row_slice(1, x.ncols(), &aggregate(x, mu)?);
                readout_grads.push(CMat::from_real(omega.transpose() * gy));
                readout_grads.push(CMat::from_real(gy.clone()));
                let g_omega = gy * w.re().transpose();
                let modulus = x.modulus();
                let xi = x.im_or_zeros();
                let unit = |v: f64, m: f64| if m > 0.0 { v / m } else { 0.0 };
                let (n, f) = x.shape();
                let re = DMatrix::from_fn(n, f, |i, j| g_omega[(0, j)] * mu[i] * unit(x.re()[(i, j)], modulus[(i, j)]));
                let im = DMatrix::from_fn(n, f, |i, j| g_omega[(0, j)] * mu[i] * unit(xi[(i, j)], modulus[(i, j)]));
                CMat::from_parts(re, im)
            }
            _ => grad_out.clone(),
        };
        let alpha = self.config.alpha;
        let mut layer_grads: Vec<Vec<CMat>> = Vec::with_capacity(self.layers.len());
        for (l, p) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[l];
            let gz = self.config.rho.backprop(&cache.pres[l], &g);
            let mut gx = CMat::zeros(x.nrows(), x.ncols());
            let mut grads = Vec::with_capacity(p.w_fwd.len() + p.w_bwd.len() + 1);
            for (branch, weights, scale) in [
                (&pg.forward, &p.w_fwd, alpha),
                (&pg.backward, &p.w_bwd, 1.0 - alpha),
            ] {
                for (atom, w) in branch.atoms().iter().zip(weights) {
                    if scale == 0.0 {
                        grads.push(CMat::zeros(w.nrows(), w.ncols()));
                        continue;
                    }
                    let h = atom.adjoint_matmul(&gz).scale(scale);
                    grads.push(x.adjoint_matmul(&h));
                    gx += &h.matmul_adjoint(w);
                }
            }
            grads.push(gz.column_sums());
            if self.config.field == ScalarField::Real {
                for t in &mut grads {
                    *t = t.real_part();
                }
            }
            layer_grads.push(grads);
            g = gx;
        }
        layer_grads.reverse();
        let mut tensors: Vec<CMat> = layer_grads.into_iter().flatten().collect();
        tensors.extend(readout_grads);
        Ok(Gradients { tensors })
    }

    /// Smallest distance of any pre-activation plane entry to the
    /// activation kink, and of any aggregated feature to zero modulus.
    pub(crate) fn kink_margin(&self, cache: &ForwardCache) -> f64 {
        let mut margin = f64::INFINITY;
        for z in &cache.pres {
            margin = margin.min(z.re().iter().fold(f64::INFINITY, |m, v| m.min(v.abs())));
            if let Some(im) = z.im() {
                margin = margin.min(im.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())));
            }
        }
        if matches!(self.config.readout, ReadoutKind::Graph { .. }) {
            margin = margin.min(cache.last.modulus().iter().fold(f64::INFINITY, |m, v| m.min(*v)));
        }
        margin
    }

    pub(crate) fn cache_output(&self, cache: &ForwardCache, mu: &[f64]) -> Result<ModelOutput, NetworkError> {
        self.readout_forward(&cache.last, mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::C64;
    use crate::digraph::Edge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path3() -> DiGraph {
        DiGraph::from_edges(3, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)], None).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let g = path3();
        let op = g.operator(OperatorKind::Adjacency);
        let fwd = PrecomputedBank::forward(&op, FilterBankSpec::faber(2)).unwrap();
        let bwd = PrecomputedBank::backward(&op, FilterBankSpec::faber(2)).unwrap();
        let p = LayerParams::zeros(2, 3, 3, 3);
        let x = CMat::from_real(DMatrix::from_element(3, 2, 1.0));
        let out = layer_forward(&x, &p, &fwd, &bwd, 0.5, Nonlinearity::SplitRelu).unwrap();
        assert_eq!(out.frobenius_norm(), 0.0);
    }

    #[test]
    fn identity_layer() {
        let g = path3();
        let op = g.operator(OperatorKind::Adjacency);
        let spec = FilterBankSpec::Faber {
            max_order: 1,
            gamma: 1.0,
            include_order_zero: true,
        };
        let fwd = PrecomputedBank::forward(&op, spec).unwrap();
        let bwd = PrecomputedBank::backward(&op, spec).unwrap();
        let mut p = LayerParams::zeros(2, 2, 2, 2);
        p.w_fwd[0] = CMat::identity(2);
        let x = CMat::from_real(DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 2.0, 0.0, 0.25, 3.0]));
        let out = layer_forward(&x, &p, &fwd, &bwd, 1.0, Nonlinearity::SplitRelu).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn adjacency_moves_mass_along_path() {
        let g = path3();
        let op = g.operator(OperatorKind::Adjacency);
        let spec = FilterBankSpec::Faber {
            max_order: 1,
            gamma: 1.0,
            include_order_zero: false,
        };
        let fwd = PrecomputedBank::forward(&op, spec).unwrap();
        let bwd = PrecomputedBank::backward(&op, spec).unwrap();
        let mut p = LayerParams::zeros(1, 1, 1, 1);
        p.w_fwd[0] = CMat::identity(1);
        let mut x = CMat::zeros(3, 1);
        x.set(0, 0, C64::new(1.0, 0.0));
        let out = layer_forward(&x, &p, &fwd, &bwd, 1.0, Nonlinearity::SplitRelu).unwrap();
        assert_eq!(out.re().as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn flat_parameters_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ModelConfig::dir_resolvnet(2, vec![3, 2], ReadoutKind::Node { outputs: 2 }, 2);
        let mut model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let flat = model.params_flat();
        // layer 0: 4 complex 2x3 weights + 1x3 bias; layer 1: 4 complex 3x2
        // weights + 1x2 bias; real 4x2 readout + 1x2 bias
        assert_eq!(flat.len(), (48 + 6) + (48 + 4) + (8 + 2));
        let doubled: Vec<f64> = flat.iter().map(|v| 2.0 * v).collect();
        model.set_params_flat(&doubled).unwrap();
        assert_eq!(model.params_flat(), doubled);
    }

    #[test]
    fn depth_zero_node_readout_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = ModelConfig::fabernet(2, vec![], ReadoutKind::Node { outputs: 1 }, 1);
        let model = HoloNetModel::new(cfg, &mut rng).unwrap();
        let g = path3();
        let pg = model.prepare(&g).unwrap();
        let x = CMat::from_real(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let (w, b) = model.readout().unwrap();
        let expect = x.stack_columns() * w.re() + b.broadcast_row(3).re();
        assert_eq!(model.forward(&pg, &x).unwrap(), ModelOutput::Node(expect));
    }
}
