//! Convergence sweeps and the two small training experiments.

use super::generators::{gen_direction_task, gen_two_scale_regression, DeflectionFamily, SyntheticTaskSpec};
use super::ExperimentError;
use crate::cmat::{CMat, C64};
use crate::coarse::{build_limit_graph, filter_convergence_gap, resolvent_convergence_gap};
use crate::digraph::weighted_norm;
use crate::holocalc::FilterBankSpec;
use crate::network::{
    aggregate, evaluate_loss, node_accuracy, train, GraphSample, HoloNetModel, Loss, ModelConfig,
    NodeClassificationData, OptimizerKind, ReadoutKind, Task, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

pub const THEOREM_CSV_HEADER: &str = "c,resolvent_gap,filter_gap,node_gap,graph_gap";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremRow {
    pub c: f64,
    pub resolvent_gap: f64,
    pub filter_gap: f64,
    pub node_gap: f64,
    pub graph_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapColumn {
    Resolvent,
    Filter,
    Node,
    Graph,
}

impl GapColumn {
    pub const ALL: [GapColumn; 4] = [Self::Resolvent, Self::Filter, Self::Node, Self::Graph];

    pub fn name(self) -> &'static str {
        match self {
            Self::Resolvent => "resolvent_gap",
            Self::Filter => "filter_gap",
            Self::Node => "node_gap",
            Self::Graph => "graph_gap",
        }
    }

    pub fn of(self, row: &TheoremRow) -> f64 {
        match self {
            Self::Resolvent => row.resolvent_gap,
            Self::Filter => row.filter_gap,
            Self::Node => row.node_gap,
            Self::Graph => row.graph_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremSuiteConfig {
    /// Layers used for the node and graph gaps; any readout is ignored.
    pub model: ModelConfig,
    /// Number of resolvent powers in the random filter.
    pub filter_order: usize,
    pub seed: u64,
}

impl TheoremSuiteConfig {
    pub fn dir_resolvnet(seed: u64) -> Self {
        Self {
            model: ModelConfig::dir_resolvnet(3, vec![8, 8], ReadoutKind::None, 2),
            filter_order: 3,
            seed,
        }
    }

    pub fn fabernet(seed: u64) -> Self {
        Self {
            model: ModelConfig::fabernet(3, vec![8, 8], ReadoutKind::None, 2),
            ..Self::dir_resolvnet(seed)
        }
    }
}

fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// All four gaps at each scale of `family`. Model parameters, filter
/// coefficients and input features are drawn once from `config.seed` and
/// shared by every scale.
pub fn run_theorem_suite(family: &DeflectionFamily, config: &TheoremSuiteConfig) -> Result<Vec<TheoremRow>, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model_cfg = ModelConfig {
        readout: ReadoutKind::None,
        ..config.model.clone()
    };
    let model = HoloNetModel::new(model_cfg, &mut rng)?;
    let theta: Vec<C64> = (0..config.filter_order.max(1)).map(|_| random_complex(&mut rng)).collect();
    let n = family.base().n_nodes();
    let x = CMat::from_fn(n, config.model.input_dim, |_, _| random_complex(&mut rng));
    let y = match config.model.forward_bank {
        FilterBankSpec::Resolvent { pole, .. } => pole,
        FilterBankSpec::Faber { .. } => C64::new(-1.0, 0.0),
    };
    let members = family.members()?;
    members
        .par_iter()
        .map(|g| {
            let c = g.scale();
            let resolvent_gap = resolvent_convergence_gap(g, y, &[c])?[0].1;
            let filter_gap = filter_convergence_gap(g, y, &theta, &[c])?[0].1;
            let lg = build_limit_graph(g)?;
            let fine_graph = g.graph();
            let fine = model.features(&model.prepare(&fine_graph)?, &x)?;
            let coarse = model.features(&model.prepare(lg.graph())?, &lg.project_down(&x)?)?;
            let node_gap = weighted_norm(&(&fine - &lg.interpolate_up(&coarse)?), g.node_weights());
            let a = aggregate(&fine, g.node_weights())?;
            let b = aggregate(&coarse, lg.graph().node_weights())?;
            let graph_gap = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            Ok(TheoremRow {
                c,
                resolvent_gap,
                filter_gap,
                node_gap,
                graph_gap,
            })
        })
        .collect()
}

pub fn theorem_csv(rows: &[TheoremRow]) -> String {
    let mut out = format!("{THEOREM_CSV_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.c, r.resolvent_gap, r.filter_gap, r.node_gap, r.graph_gap).unwrap();
    }
    out
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// `gap(c_hi) / gap(c_lo)` for one column. `None` if either scale is absent.
pub fn decay_ratio(rows: &[TheoremRow], column: GapColumn, c_lo: f64, c_hi: f64) -> Option<f64> {
    let at = |c: f64| rows.iter().find(|r| r.c == c).map(|r| column.of(r));
    Some(at(c_hi)? / at(c_lo)?)
}

/// Columns that fail to decrease strictly or whose ratio between `1e6`
/// and `1e2` exceeds `max_ratio`.
pub fn convergence_failures(rows: &[TheoremRow], columns: &[GapColumn], max_ratio: f64) -> Vec<String> {
    let mut failures = Vec::new();
    for &col in columns {
        let values: Vec<f64> = rows.iter().map(|r| col.of(r)).collect();
        if !strictly_decreasing(&values) {
            failures.push(format!("{} is not strictly decreasing: {values:?}", col.name()));
        }
        match decay_ratio(rows, col, 1e2, 1e6) {
            Some(r) if r <= max_ratio => {}
            Some(r) => failures.push(format!("{} decay ratio {r:e} exceeds {max_ratio:e}", col.name())),
            None => failures.push(format!("{} lacks the scales 1e2 and 1e6", col.name())),
        }
    }
    failures
}

/// Log-log plot of `(c, gap)` series as a standalone SVG document.
/// Nonpositive values are skipped.
pub fn convergence_svg(series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|&(c, g)| c > 0.0 && g > 0.0)
        .map(|(c, g)| (c.log10(), g.log10()))
        .collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0) - 1.0, lo.max(0.0) + 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{tb}\" text-anchor=\"middle\">log10 c</text>\n\
         <text x=\"15\" y=\"{cy}\" transform=\"rotate(-90 15 {cy})\" text-anchor=\"middle\">log10 gap</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        tb = H - 15.0,
        cy = H / 2.0,
    );
    for (k, (name, s)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = s
            .iter()
            .filter(|&&(c, g)| c > 0.0 && g > 0.0)
            .map(|&(c, g)| format!("{:.2},{:.2}", sx(c.log10()), sy(g.log10())))
            .collect();
        writeln!(svg, "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>", path.join(" ")).unwrap();
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">{name}</text>",
            W - PAD - 110.0,
            PAD + 16.0 * k as f64
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionExperimentConfig {
    pub n_nodes: usize,
    pub widths: Vec<usize>,
    pub max_order: usize,
    pub train: TrainConfig,
}

impl Default for DirectionExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 200,
            widths: vec![16, 16],
            max_order: 2,
            train: TrainConfig {
                epochs: 500,
                learning_rate: 0.01,
                optimizer: OptimizerKind::Adam,
                loss: None,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionOutcome {
    pub directed_accuracy: f64,
    pub symmetric_accuracy: f64,
}

/// Trains identical FaberNets (same seed, same initialization) on the
/// direction task and on its symmetrized copy and reports train accuracies.
pub fn run_direction_experiment(config: &DirectionExperimentConfig, seed: u64) -> Result<DirectionOutcome, ExperimentError> {
    let spec = SyntheticTaskSpec::direction_parity(config.n_nodes, seed);
    let data = gen_direction_task(&spec)?.remove(0).data;
    let sym = NodeClassificationData {
        graph: data.graph.symmetrized(),
        ..data.clone()
    };
    let model_cfg = ModelConfig::fabernet(
        spec.feature_dim,
        config.widths.clone(),
        ReadoutKind::Node { outputs: 2 },
        config.max_order,
    );
    let accuracy = |d: &NodeClassificationData| -> Result<f64, ExperimentError> {
        let mut model = HoloNetModel::new(model_cfg.clone(), &mut ChaCha8Rng::seed_from_u64(seed))?;
        train(&mut model, Task::NodeClassification(d), &config.train)?;
        Ok(node_accuracy(&model, d, None)?)
    };
    Ok(DirectionOutcome {
        directed_accuracy: accuracy(&data)?,
        symmetric_accuracy: accuracy(&sym)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseInferenceReport {
    pub fine_mae: f64,
    pub coarse_mae: f64,
}

impl CoarseInferenceReport {
    /// `coarse_mae / fine_mae`, taken as 1 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.fine_mae == 0.0 && self.coarse_mae == 0.0 {
            1.0
        } else {
            self.coarse_mae / self.fine_mae
        }
    }
}

/// MAE of a model trained on fine graphs, on fine test graphs and on their
/// collapsed counterparts.
pub fn run_coarse_inference(
    model: &HoloNetModel,
    fine: &[GraphSample],
    coarse: &[GraphSample],
) -> Result<CoarseInferenceReport, ExperimentError> {
    if fine.len() != coarse.len() {
        return Err(ExperimentError::InvalidSpec(format!(
            "{} fine graphs but {} collapsed ones",
            fine.len(),
            coarse.len()
        )));
    }
    Ok(CoarseInferenceReport {
        fine_mae: evaluate_loss(model, Task::GraphRegression(fine), Loss::Mae)?,
        coarse_mae: evaluate_loss(model, Task::GraphRegression(coarse), Loss::Mae)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseExperimentConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub widths: Vec<usize>,
    pub order: usize,
    pub train: TrainConfig,
}

impl Default for CoarseExperimentConfig {
    fn default() -> Self {
        Self {
            n_train: 40,
            n_test: 20,
            widths: vec![8, 8],
            order: 2,
            train: TrainConfig {
                epochs: 300,
                learning_rate: 0.01,
                optimizer: OptimizerKind::Adam,
                loss: Some(Loss::Mae),
            },
        }
    }
}

/// Which architecture the coarse-inference experiment trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    DirResolvNet,
    FaberNet,
}

/// Generates the regression family for `seed`, trains `arch` on the fine
/// training graphs and evaluates on fine and collapsed test graphs.
pub fn run_coarse_experiment(
    arch: Architecture,
    config: &CoarseExperimentConfig,
    seed: u64,
) -> Result<CoarseInferenceReport, ExperimentError> {
    let spec = SyntheticTaskSpec::two_scale_regression(config.n_train + config.n_test, seed);
    let samples = gen_two_scale_regression(&spec)?;
    let (train_set, test_set) = samples.split_at(config.n_train);
    let fine_train: Vec<GraphSample> = train_set.iter().map(|s| s.fine.clone()).collect();
    let fine_test: Vec<GraphSample> = test_set.iter().map(|s| s.fine.clone()).collect();
    let coarse_test: Vec<GraphSample> = test_set.iter().map(|s| s.coarse.clone()).collect();
    let readout = ReadoutKind::Graph { outputs: 1 };
    let model_cfg = match arch {
        Architecture::DirResolvNet => ModelConfig::dir_resolvnet(spec.feature_dim, config.widths.clone(), readout, config.order),
        Architecture::FaberNet => ModelConfig::fabernet(spec.feature_dim, config.widths.clone(), readout, config.order),
    };
    let mut model = HoloNetModel::new(model_cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
    train(&mut model, Task::GraphRegression(&fine_train), &config.train)?;
    run_coarse_inference(&model, &fine_test, &coarse_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::TwoScaleGraph;
    use crate::experiments::generators::{random_cluster_graph, role_features, two_scale_sample};
    use nalgebra::DMatrix;

    fn family(seed: u64) -> DeflectionFamily {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = random_cluster_graph(&mut rng, 16, 1.0).unwrap();
        DeflectionFamily::from_scales(g, &crate::coarse::DEFAULT_C_GRID).unwrap()
    }

    #[test]
    fn no_high_tier_gives_zero_gaps() {
        let g = family(1).base().clone();
        let flat = TwoScaleGraph::new(g.w_regular().clone(), DMatrix::zeros(g.n_nodes(), g.n_nodes()), g.node_weights().to_vec(), 1.0).unwrap();
        let fam = DeflectionFamily::from_scales(flat, &[1.0, 10.0]).unwrap();
        for row in run_theorem_suite(&fam, &TheoremSuiteConfig::dir_resolvnet(0)).unwrap() {
            for col in GapColumn::ALL {
                assert_eq!(col.of(&row), 0.0, "{}", col.name());
            }
        }
    }

    #[test]
    fn dir_resolvnet_gaps_decay() {
        let rows = run_theorem_suite(&family(3), &TheoremSuiteConfig::dir_resolvnet(5)).unwrap();
        assert_eq!(convergence_failures(&rows, &GapColumn::ALL, 1e-3), Vec::<String>::new());
        let csv = theorem_csv(&rows);
        assert!(csv.starts_with(THEOREM_CSV_HEADER));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn fabernet_graph_gap_does_not_vanish() {
        let fam = family(3);
        let ours = run_theorem_suite(&fam, &TheoremSuiteConfig::dir_resolvnet(5)).unwrap();
        let base = run_theorem_suite(&fam, &TheoremSuiteConfig::fabernet(5)).unwrap();
        assert!(ours.last().unwrap().graph_gap < 0.1 * base.last().unwrap().graph_gap);
    }

    #[test]
    fn identical_graphs_give_unit_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g, roles) = random_cluster_graph(&mut rng, 12, 1.0).unwrap();
        let flat = TwoScaleGraph::new(g.w_regular().clone(), DMatrix::zeros(g.n_nodes(), g.n_nodes()), g.node_weights().to_vec(), 1.0).unwrap();
        let s = two_scale_sample(flat, role_features(&roles), 0.0, &mut rng).unwrap();
        let model = HoloNetModel::new(
            ModelConfig::dir_resolvnet(2, vec![4], ReadoutKind::Graph { outputs: 1 }, 2),
            &mut rng,
        )
        .unwrap();
        let report = run_coarse_inference(&model, &[s.fine.clone()], &[s.coarse.clone()]).unwrap();
        assert!((report.ratio() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let svg = convergence_svg(&[("a", vec![(1.0, 1.0), (10.0, 0.1)]), ("b", vec![(1.0, 0.5)])]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
    }
}
