use crate::config::{RunConfig, TaskChoice};
use crate::CliError;
use holonet::cmat::{relative_frobenius, CMat, C64};
use holonet::coarse::{self, build_limit_graph, resolvent_convergence_gap, CoarseError, TwoScaleGraph};
use holonet::digraph::{DiGraph, GraphError};
use holonet::experiments::{
    convergence_svg, gen_direction_task, gen_two_scale_regression, run_coarse_inference, run_theorem_suite,
    strictly_decreasing, theorem_csv, DeflectionFamily, ExperimentError, GapColumn, SyntheticTaskSpec,
    TheoremSuiteConfig, TwoScaleSample,
};
use holonet::holocalc::{
    bank_matches_contour, contour_apply, spectral_response, Contour, Exp, FilterBankSpec, HoloError, Polynomial,
    PrecomputedBank, ScalarFunction, SpectralResponseOracle,
};
use holonet::io::{self, EdgeList, IoError};
use holonet::nalgebra::DMatrix;
use holonet::network::{
    self as net, gradcheck as run_gradcheck, load_checkpoint, node_accuracy, save_checkpoint, GraphSample,
    HoloNetModel, Loss, NetworkError, NodeClassificationData, ReadoutKind, Task,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn holo_err(e: HoloError) -> CliError {
    match e {
        HoloError::SingularResolvent { .. }
        | HoloError::PoleOnSpectrum { .. }
        | HoloError::PoleInsideContour { .. }
        | HoloError::ContourDoesNotEnclose { .. }
        | HoloError::IllConditionedSpectrum(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

impl From<HoloError> for CliError {
    fn from(e: HoloError) -> Self {
        holo_err(e)
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CoarseError> for CliError {
    fn from(e: CoarseError) -> Self {
        match e {
            CoarseError::Holo(h) => holo_err(h),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Holo(h) => holo_err(h),
            NetworkError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Holo(h) => h.into(),
            ExperimentError::Coarse(c) => c.into(),
            ExperimentError::Network(n) => n.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Coarse(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn graph_files(cfg: &RunConfig) -> Result<(EdgeList, Vec<f64>), CliError> {
    let path = cfg
        .graph
        .path
        .as_deref()
        .ok_or_else(|| CliError::Config("no graph file given ([graph] path or positional argument)".into()))?;
    Ok(io::read_graph_files(path, cfg.graph.node_weights.as_deref())?)
}

fn two_scale(cfg: &RunConfig) -> Result<(EdgeList, TwoScaleGraph), CliError> {
    let (list, mu) = graph_files(cfg)?;
    let g = TwoScaleGraph::new(list.regular_adjacency(), list.high_adjacency(), mu, cfg.graph.scale)?;
    Ok((list, g))
}

fn set_string(ids: &[usize], base: usize) -> String {
    let items: Vec<String> = ids.iter().map(|i| (i + base).to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn filter_apply(cfg: &RunConfig) -> Result<(), CliError> {
    let (list, mu) = graph_files(cfg)?;
    let w = list.regular_adjacency() + list.high_adjacency() * cfg.graph.scale;
    let graph = DiGraph::from_adjacency(w, mu)?;
    let n = graph.n_nodes();
    let op = graph.operator(cfg.graph_operator().map_err(CliError::Config)?);
    let bank = PrecomputedBank::forward(&op, cfg.bank.spec().map_err(CliError::Config)?)?;
    let theta: Vec<C64> = if cfg.filter.theta.is_empty() {
        vec![C64::new(1.0, 0.0); bank.len()]
    } else if cfg.filter.theta.len() == bank.len() {
        cfg.filter.theta.iter().map(|&t| C64::new(t, 0.0)).collect()
    } else {
        return Err(CliError::Config(format!(
            "[filter] theta has {} entries but the bank has {} atoms",
            cfg.filter.theta.len(),
            bank.len()
        )));
    };
    let x = match cfg.filter.signal.as_str() {
        "ones" => CMat::from_real(DMatrix::from_element(n, 1, 1.0)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            CMat::from_real(DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0)))
        }
        _ => {
            let node = cfg
                .filter
                .node
                .checked_sub(list.base)
                .filter(|&i| i < n)
                .ok_or_else(|| CliError::Config(format!("[filter] node {} is not in the graph", cfg.filter.node)))?;
            CMat::from_real(DMatrix::from_fn(n, 1, |i, _| (i == node) as u8 as f64))
        }
    };
    let y = bank.filter(&theta).matmul(&x);
    let mut csv = String::from("node,re,im\n");
    for i in 0..n {
        let v = y.get(i, 0);
        writeln!(csv, "{},{},{}", i + list.base, v.re, v.im).unwrap();
    }
    let path = cfg.output_dir.join("filtered.csv");
    write(&path, &csv)?;
    println!("applied {} atoms on {n} nodes; wrote {}", bank.len(), path.display());
    Ok(())
}

pub fn reaches(cfg: &RunConfig) -> Result<(), CliError> {
    let (list, _) = graph_files(cfg)?;
    let adjacency = if list.has_high_tier() {
        list.high_adjacency()
    } else {
        list.combined_adjacency()
    };
    let partition = coarse::reaches(&adjacency);
    let mut text = String::new();
    for (k, r) in partition.reaches().iter().enumerate() {
        writeln!(text, "R{} = {}", k + 1, set_string(r, list.base)).unwrap();
    }
    print!("{text}");
    if !partition.is_partition() {
        println!("reaches overlap; the graph does not collapse to a limit graph");
    }
    write(&cfg.output_dir.join("reaches.txt"), &text)
}

pub fn coarsen(cfg: &RunConfig) -> Result<(), CliError> {
    let (list, g) = two_scale(cfg)?;
    let lg = build_limit_graph(&g)?;
    let dir = &cfg.output_dir;
    write(&dir.join("limit.tsv"), &io::format_edge_list(lg.graph(), list.base))?;
    write(&dir.join("limit.mu"), &io::format_node_weights(lg.graph().node_weights(), list.base))?;
    write(&dir.join("assignment.tsv"), &io::format_assignment(&lg, list.base))?;
    println!("collapsed {} nodes into {} reaches", lg.n_fine(), lg.n_coarse());
    for (k, r) in lg.partition().reaches().iter().enumerate() {
        println!("  {} <- {}", k + list.base, set_string(r, list.base));
    }
    Ok(())
}

pub fn converge(cfg: &RunConfig) -> Result<(), CliError> {
    let (_, g) = two_scale(cfg)?;
    let grid = &cfg.converge.c_grid;
    let dir = &cfg.output_dir;
    let columns: Vec<(&str, Vec<(f64, f64)>)> = if cfg.converge.mode == "suite" {
        let family = DeflectionFamily::from_scales(g, grid)?;
        let suite = TheoremSuiteConfig {
            model: cfg.model_config(3, ReadoutKind::None).map_err(CliError::Config)?,
            filter_order: cfg.bank.k,
            seed: cfg.seed,
        };
        let rows = run_theorem_suite(&family, &suite)?;
        write(&dir.join("theorem.csv"), &theorem_csv(&rows))?;
        GapColumn::ALL
            .iter()
            .map(|col| (col.name(), rows.iter().map(|r| (r.c, col.of(r))).collect()))
            .collect()
    } else {
        let y = C64::new(cfg.converge.y_real, cfg.converge.y_imag);
        let gaps = resolvent_convergence_gap(&g, y, grid)?;
        let mut csv = String::from("c,gap\n");
        for (c, gap) in &gaps {
            writeln!(csv, "{c},{gap}").unwrap();
        }
        write(&dir.join("converge.csv"), &csv)?;
        vec![("gap", gaps)]
    };
    for (name, series) in &columns {
        let first = series.first().map_or(0.0, |p| p.1);
        let last = series.last().map_or(0.0, |p| p.1);
        println!("{name}: {first:e} at c = {} -> {last:e} at c = {}", grid[0], grid[grid.len() - 1]);
    }
    if cfg.converge.plot {
        write(&dir.join("converge.svg"), &convergence_svg(&columns))?;
    }
    if cfg.converge.check {
        let bad: Vec<&str> = columns
            .iter()
            .filter(|(_, s)| !strictly_decreasing(&s.iter().map(|p| p.1).collect::<Vec<_>>()))
            .map(|(n, _)| *n)
            .collect();
        if !bad.is_empty() {
            return Err(CliError::Check(format!("not strictly decreasing: {}", bad.join(", "))));
        }
    }
    Ok(())
}

enum TaskData {
    Direction(NodeClassificationData),
    TwoScale {
        train: Vec<GraphSample>,
        test: Vec<TwoScaleSample>,
    },
}

fn task_data(cfg: &RunConfig, n_nodes: usize, n_train: usize, n_test: usize) -> Result<TaskData, CliError> {
    Ok(match cfg.task().map_err(CliError::Config)? {
        TaskChoice::Direction => {
            let spec = SyntheticTaskSpec::direction_parity(n_nodes, cfg.seed);
            TaskData::Direction(gen_direction_task(&spec)?.remove(0).data)
        }
        TaskChoice::TwoScale => {
            let spec = SyntheticTaskSpec {
                n_nodes,
                ..SyntheticTaskSpec::two_scale_regression(n_train + n_test, cfg.seed)
            };
            let mut samples = gen_two_scale_regression(&spec)?;
            let test = samples.split_off(n_train);
            TaskData::TwoScale {
                train: samples.into_iter().map(|s| s.fine).collect(),
                test,
            }
        }
    })
}

impl TaskData {
    fn input_dim(&self) -> usize {
        match self {
            Self::Direction(d) => d.features.ncols(),
            Self::TwoScale { train, .. } => train[0].features.ncols(),
        }
    }

    fn readout(&self) -> ReadoutKind {
        match self {
            Self::Direction(_) => ReadoutKind::Node { outputs: 2 },
            Self::TwoScale { .. } => ReadoutKind::Graph { outputs: 1 },
        }
    }

    fn task(&self) -> Task<'_> {
        match self {
            Self::Direction(d) => Task::NodeClassification(d),
            Self::TwoScale { train, .. } => Task::GraphRegression(train),
        }
    }

    fn metrics(&self, model: &HoloNetModel) -> Result<Vec<(&'static str, f64)>, CliError> {
        Ok(match self {
            Self::Direction(d) => vec![("train_accuracy", node_accuracy(model, d, None)?)],
            Self::TwoScale { train, test } => {
                let fine: Vec<GraphSample> = test.iter().map(|s| s.fine.clone()).collect();
                let coarse: Vec<GraphSample> = test.iter().map(|s| s.coarse.clone()).collect();
                let report = run_coarse_inference(model, &fine, &coarse)?;
                vec![
                    ("train_mae", net::evaluate_loss(model, Task::GraphRegression(train), Loss::Mae)?),
                    ("fine_mae", report.fine_mae),
                    ("coarse_mae", report.coarse_mae),
                    ("coarse_fine_ratio", report.ratio()),
                ]
            }
        })
    }
}

fn metrics_csv(metrics: &[(&str, f64)]) -> String {
    metrics.iter().fold(String::from("metric,value\n"), |mut s, (k, v)| {
        writeln!(s, "{k},{v}").unwrap();
        s
    })
}

fn checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.train
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("checkpoint.json"))
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let data = task_data(cfg, cfg.train.n_nodes, cfg.train.n_train, cfg.train.n_test)?;
    let model_cfg = cfg.model_config(data.input_dim(), data.readout()).map_err(CliError::Config)?;
    let mut model = HoloNetModel::new(model_cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let report = net::train(&mut model, data.task(), &cfg.train_config().map_err(CliError::Config)?)?;
    let mut losses = String::from("epoch,loss\n");
    for (e, l) in report.losses.iter().enumerate() {
        writeln!(losses, "{e},{l}").unwrap();
    }
    write(&cfg.output_dir.join("losses.csv"), &losses)?;
    let ck = checkpoint_path(cfg);
    save_checkpoint(&model, &ck)?;
    let metrics = data.metrics(&model)?;
    write(&cfg.output_dir.join("metrics.csv"), &metrics_csv(&metrics))?;
    println!("loss {:e} -> {:e}", report.initial_loss(), report.final_loss());
    for (k, v) in &metrics {
        println!("{k} = {v}");
    }
    println!("checkpoint: {}", ck.display());
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let model = load_checkpoint(&checkpoint_path(cfg))?;
    let data = task_data(cfg, cfg.train.n_nodes, cfg.train.n_train, cfg.train.n_test)?;
    let mc = model.config();
    if mc.input_dim != data.input_dim() || std::mem::discriminant(&mc.readout) != std::mem::discriminant(&data.readout()) {
        return Err(CliError::Config("checkpoint does not match the configured task".into()));
    }
    let metrics = data.metrics(&model)?;
    write(&cfg.output_dir.join("eval.csv"), &metrics_csv(&metrics))?;
    for (k, v) in &metrics {
        println!("{k} = {v}");
    }
    Ok(())
}

pub fn gradcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.gradcheck.n_nodes;
    let data = task_data(cfg, n, 3, 1)?;
    let model_cfg = cfg.model_config(data.input_dim(), data.readout()).map_err(CliError::Config)?;
    let model = HoloNetModel::new(model_cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let task = data.task();
    let report = run_gradcheck(&model, task, task.default_loss())?;
    let mut csv = String::from("tensor,relative_error\n");
    for (name, err) in &report.per_tensor {
        writeln!(csv, "{name},{err}").unwrap();
    }
    write(&cfg.output_dir.join("gradcheck.csv"), &csv)?;
    println!(
        "max relative error {:e} over {} tensors{}",
        report.max_relative_error,
        report.per_tensor.len(),
        if report.jittered { " (inputs jittered)" } else { "" }
    );
    if report.max_relative_error > cfg.gradcheck.tolerance {
        return Err(CliError::Check(format!(
            "gradient error {:e} exceeds {:e}",
            report.max_relative_error, cfg.gradcheck.tolerance
        )));
    }
    Ok(())
}

const ORACLE_TOL: f64 = 1e-7;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let scale = m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    m * C64::new(norm / scale, 0.0)
}

/// Cross-checks of the functional calculus: contour quadrature against
/// polynomial evaluation and the spectral oracle, the nilpotent path graph,
/// and precomputed banks against quadrature.
pub fn oracle_check(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for case in 0..20 {
        let (n, norm) = (rng.random_range(1..=12), rng.random_range(0.1..2.0));
        let t = random_matrix(&mut rng, n, norm);
        let deg = rng.random_range(0..=6);
        let p = Polynomial::new((0..=deg).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
        let by_contour = contour_apply(|z| p.eval(z), &t, &Contour::enclosing(&t))?;
        rows.push((format!("polynomial_{case}"), relative_frobenius(&by_contour, &p.apply_matrix(&t)), ORACLE_TOL));
    }
    for case in 0..5 {
        let n = rng.random_range(2..=8);
        let t = random_matrix(&mut rng, n, 1.0);
        let oracle = SpectralResponseOracle::new(&t)?.apply(&Exp);
        let by_contour = contour_apply(|z| z.exp(), &t, &Contour::enclosing(&t))?;
        rows.push((format!("spectral_exp_{case}"), relative_frobenius(&by_contour, &oracle), 1e-6));
    }
    let path = DMatrix::from_fn(3, 3, |i, j| C64::new((i == j + 1) as u8 as f64, 0.0));
    let cube = spectral_response(&path, &Polynomial::monomial(3))?;
    rows.push(("path_cube_is_zero".into(), cube.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0));
    let w = DMatrix::from_fn(8, 8, |i, j| if i != j && rng.random::<f64>() < 0.3 { rng.random_range(0.5..1.5) } else { 0.0 });
    let g = DiGraph::from_adjacency(w, vec![1.0; 8])?;
    for (name, kind, spec) in [
        ("faber_bank", holonet::digraph::OperatorKind::FaberNetNormalized, FilterBankSpec::faber(3)),
        ("resolvent_bank", holonet::digraph::OperatorKind::InDegreeLaplacian, FilterBankSpec::resolvent(3)),
    ] {
        let op = g.operator(kind);
        let bank = PrecomputedBank::forward(&op, spec)?;
        let contour = match spec {
            FilterBankSpec::Faber { .. } => Contour::enclosing(&holonet::cmat::to_complex_real(op.matrix())),
            // Gershgorin: the spectrum of L lies in the disc about max d_in of
            // that radius, which keeps the pole at -1 outside; the margins are
            // narrow, hence the extra quadrature nodes
            FilterBankSpec::Resolvent { .. } => {
                let d = g.in_degrees().into_iter().fold(0.0, f64::max);
                Contour::new(C64::new(d, 0.0), d + 0.5, 2048)?
            }
        };
        let err = bank_matches_contour(&bank, &contour)?;
        rows.push((name.into(), err, ORACLE_TOL));
    }
    let mut csv = String::from("check,error,tolerance,passed\n");
    let mut failed = Vec::new();
    for (name, err, tol) in &rows {
        let ok = *err <= *tol;
        writeln!(csv, "{name},{err},{tol},{ok}").unwrap();
        if !ok {
            failed.push(name.clone());
        }
    }
    write(&cfg.output_dir.join("oracle.csv"), &csv)?;
    println!("{} of {} oracle checks passed", rows.len() - failed.len(), rows.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("failed: {}", failed.join(", "))))
    }
}
