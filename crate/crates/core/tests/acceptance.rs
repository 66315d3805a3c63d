//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion does.

use holonet::cmat::{CMat, C64};
use holonet::coarse::{self, build_limit_graph, resolvent_convergence_gap, TwoScaleGraph, DEFAULT_C_GRID};
use holonet::digraph::{DiGraph, OperatorKind};
use holonet::experiments::{
    convergence_failures, random_cluster_graph, run_coarse_experiment, run_direction_experiment, run_theorem_suite,
    Architecture, CoarseExperimentConfig, DeflectionFamily, DirectionExperimentConfig, GapColumn, TheoremSuiteConfig,
};
use holonet::holocalc::{contour_apply, eigenvalues_real, spectral_response, Contour, FilterBankSpec, Polynomial};
use holonet::io::load_graph;
use holonet::nalgebra::DMatrix;
use holonet::network::{
    evaluate_loss, expand_complex_to_real, gradcheck, loss_and_gradient, GraphSample, HoloNetModel, Loss,
    ModelConfig, ModelOutput, NodeClassificationData, Nonlinearity, ReadoutKind, ScalarField, Task,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn cplx(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn frob(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rel(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    frob(&(a - b)) / frob(b).max(f64::MIN_POSITIVE)
}

fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> DiGraph {
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rng.random::<f64>() < 0.35 {
            rng.random_range(0.5..2.0)
        } else {
            0.0
        }
    });
    let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    DiGraph::from_adjacency(w, mu).unwrap()
}

/// Horner evaluation of `Σ a_k T^k`, written out here rather than borrowed
/// from the library.
fn horner(coeffs: &[C64], t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for &a in coeffs.iter().rev() {
        acc = &acc * t;
        for i in 0..n {
            acc[(i, i)] += a;
        }
    }
    acc
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=20);
        let raw = DMatrix::from_fn(n, n, |_, _| cplx(&mut rng));
        let norm2 = raw.singular_values().max();
        let target = rng.random_range(0.1..2.0);
        let t = raw * C64::new(target / norm2, 0.0);
        let deg = rng.random_range(0..=6);
        let coeffs: Vec<C64> = (0..=deg).map(|_| cplx(&mut rng)).collect();
        let p = Polynomial::new(coeffs.clone());
        let contour = Contour::enclosing(&t).with_nodes(256).map_err(|e| e.to_string())?;
        let via_contour = contour_apply(
            |z| coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a),
            &t,
            &contour,
        )
        .map_err(|e| e.to_string())?;
        let direct = horner(&coeffs, &t);
        worst = worst.max(rel(&via_contour, &direct));
        // the library's own polynomial evaluation agrees as well
        worst = worst.max(rel(&p.apply_matrix(&t), &direct));
    }
    if worst <= 1e-7 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e} > 1e-7"))
    }
}

fn criterion_2() -> Outcome {
    // path 1 -> 2 -> 3
    let mut w = DMatrix::<f64>::zeros(3, 3);
    w[(1, 0)] = 1.0;
    w[(2, 1)] = 1.0;
    let eig = eigenvalues_real(&w);
    if eig.iter().any(|z| *z != C64::new(0.0, 0.0)) {
        return Err(format!("spectrum {eig:?} is not {{0}}"));
    }
    // strictly lower triangular, so the characteristic polynomial is -λ³
    if (0..3).any(|i| (i..3).any(|j| w[(i, j)] != 0.0)) {
        return Err("path matrix is not strictly triangular".into());
    }
    let w2 = &w * &w;
    let w3 = &w2 * &w;
    if w2.iter().all(|v| *v == 0.0) {
        return Err("W² vanished".into());
    }
    if w3.iter().any(|v| *v != 0.0) {
        return Err("W³ is not exactly zero".into());
    }
    let wc = w.map(|v| C64::new(v, 0.0));
    let cube = spectral_response(&wc, &Polynomial::monomial(3)).map_err(|e| e.to_string())?;
    if cube.iter().any(|z| *z != C64::new(0.0, 0.0)) {
        return Err(format!("spectral response of λ³ is {cube}"));
    }
    Ok("σ(W) = {0}, W² ≠ 0, W³ = 0, g(W) = 0 for g = λ³".into())
}

/// Maximal forward-reachable sets by transitive closure.
fn closure_reaches(w: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = w.nrows();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        reach[s][s] = true;
        for d in 0..n {
            if w[(d, s)] > 0.0 {
                reach[s][d] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let sets: Vec<Vec<usize>> = (0..n).map(|s| (0..n).filter(|&d| reach[s][d]).collect()).collect();
    let mut maximal: Vec<Vec<usize>> = sets
        .iter()
        .filter(|a| !sets.iter().any(|b| b.len() > a.len() && a.iter().all(|x| b.contains(x))))
        .cloned()
        .collect();
    maximal.sort();
    maximal.dedup();
    maximal
}

fn criterion_3() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/six_node.tsv");
    let g = load_graph(&path, None).map_err(|e| e.to_string())?;
    let got = coarse::reaches(g.adjacency()).reaches().to_vec();
    let expected = vec![vec![0, 1, 2], vec![1, 2, 3, 4, 5]];
    if got != expected {
        return Err(format!("library reaches {got:?}"));
    }
    let oracle = closure_reaches(g.adjacency());
    if oracle != expected {
        return Err(format!("closure oracle gives {oracle:?}"));
    }
    Ok("reaches {1,2,3} and {2,3,4,5,6}".into())
}

fn kernel_projection(l: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = l.nrows();
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let null: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= 1e-10 * smax.max(1.0)).collect();
    let v = DMatrix::from_fn(n, null.len(), |i, k| v_t[(null[k], i)]);
    let m = DMatrix::from_diagonal(&holonet::nalgebra::DVector::from_column_slice(mu));
    let gram = v.transpose() * &m * &v;
    &v * gram.try_inverse().unwrap() * v.transpose() * m
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut e1, mut e2, mut e3) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let (g, _) = random_cluster_graph(&mut rng, 30, 1.0).map_err(|e| e.to_string())?;
        let lg = build_limit_graph(&g).map_err(|e| e.to_string())?;
        let down = lg.project_down_matrix();
        let up = lg.interpolate_up_matrix();
        let dj = &down * &up;
        e1 = e1.max((&dj - DMatrix::identity(dj.nrows(), dj.ncols())).amax());
        let p = &up * &down;
        e2 = e2.max((&p * &p - &p).amax());
        let hg = g.high_graph();
        let l_high = holonet::digraph::in_degree_laplacian(&hg);
        e3 = e3.max((kernel_projection(&l_high, g.node_weights()) - &p).amax());
    }
    if e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-8 {
        Ok(format!("J↓J↑−Id {e1:.1e}, idempotence {e2:.1e}, kernel projection {e3:.1e}"))
    } else {
        Err(format!("J↓J↑−Id {e1:.1e}, idempotence {e2:.1e}, kernel projection {e3:.1e}"))
    }
}

fn two_scale_graphs() -> Vec<TwoScaleGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    (0..10).map(|_| random_cluster_graph(&mut rng, 40, 1.0).unwrap().0).collect()
}

fn laplacian(w: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = w.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { w.row(i).sum() } else { 0.0 };
        (d - w[(i, j)]) / mu[i]
    })
}

/// Weakly connected components of the high tier, by union-find.
fn components(high: &DMatrix<f64>) -> Vec<usize> {
    let n = high.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..n {
        for j in 0..n {
            if high[(i, j)] > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut labels: Vec<usize> = roots.clone();
    labels.sort();
    labels.dedup();
    roots.iter().map(|r| labels.binary_search(r).unwrap()).collect()
}

/// `‖R(L) − J↑R(L̲)J↓‖` built from scratch for pole −1.
fn independent_gap(g: &TwoScaleGraph, c: f64) -> f64 {
    let n = g.n_nodes();
    let mu = g.node_weights();
    let w = g.w_regular() + g.w_high() * c;
    let comp = components(g.w_high());
    let k = comp.iter().max().unwrap() + 1;
    let mut mu_bar = vec![0.0; k];
    for i in 0..n {
        mu_bar[comp[i]] += mu[i];
    }
    let mut w_bar = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        for j in 0..n {
            w_bar[(comp[i], comp[j])] += w[(i, j)];
        }
    }
    let shift = |l: DMatrix<f64>| {
        let k = l.nrows();
        (l + DMatrix::identity(k, k)).try_inverse().unwrap()
    };
    let r = shift(laplacian(&w, mu));
    let r_bar = shift(laplacian(&w_bar, &mu_bar));
    let up = DMatrix::from_fn(n, k, |i, r| (comp[i] == r) as u8 as f64);
    let down = DMatrix::from_fn(k, n, |r, i| if comp[i] == r { mu[i] / mu_bar[r] } else { 0.0 });
    let d = r - up * r_bar * down;
    let scaled = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * mu[i].sqrt() / mu[j].sqrt());
    scaled.singular_values().max()
}

fn criterion_5() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_mismatch = 0.0f64;
    for (k, g) in two_scale_graphs().iter().enumerate() {
        let gaps = resolvent_convergence_gap(g, C64::new(-1.0, 0.0), &DEFAULT_C_GRID).map_err(|e| e.to_string())?;
        let values: Vec<f64> = gaps.iter().map(|p| p.1).collect();
        if !values.windows(2).all(|w| w[1] < w[0]) {
            return Err(format!("graph {k}: gaps not strictly decreasing {values:?}"));
        }
        let ratio = values[6] / values[2];
        worst_ratio = worst_ratio.max(ratio);
        for &(c, gap) in &gaps {
            let other = independent_gap(g, c);
            worst_mismatch = worst_mismatch.max((gap - other).abs() / (1e-9 + other));
        }
    }
    if worst_mismatch > 1e-5 {
        return Err(format!("library and independent gaps differ by {worst_mismatch:.1e} relative"));
    }
    if worst_ratio <= 1e-3 {
        Ok(format!("worst gap(1e6)/gap(1e2) = {worst_ratio:.2e}; independent recomputation within {worst_mismatch:.1e}"))
    } else {
        Err(format!("worst gap(1e6)/gap(1e2) = {worst_ratio:.2e} > 1e-3"))
    }
}

fn criterion_6() -> Outcome {
    let mut worst = [0.0f64; 3];
    for (k, g) in two_scale_graphs().into_iter().enumerate() {
        let family = DeflectionFamily::from_scales(g, &DEFAULT_C_GRID).map_err(|e| e.to_string())?;
        let rows = run_theorem_suite(&family, &TheoremSuiteConfig::dir_resolvnet(600 + k as u64)).map_err(|e| e.to_string())?;
        let cols = [GapColumn::Filter, GapColumn::Node, GapColumn::Graph];
        let failures = convergence_failures(&rows, &cols, 1e-3);
        if !failures.is_empty() {
            return Err(format!("graph {k}: {}", failures.join("; ")));
        }
        for (slot, col) in worst.iter_mut().zip(cols) {
            let at = |c: f64| col.of(rows.iter().find(|r| r.c == c).unwrap());
            *slot = slot.max(at(1e6) / at(1e2));
        }
    }
    Ok(format!(
        "worst decay ratios: filter {:.1e}, node {:.1e}, graph {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn random_complex_model(rng: &mut ChaCha8Rng) -> (ModelConfig, usize) {
    let depth = rng.random_range(1..=3);
    let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=4)).collect();
    let input_dim = rng.random_range(1..=3);
    let (operator, bank) = if rng.random::<bool>() {
        let kind = [OperatorKind::Adjacency, OperatorKind::FaberNetNormalized, OperatorKind::InDegreeLaplacian]
            [rng.random_range(0..3)];
        (
            kind,
            FilterBankSpec::Faber {
                max_order: rng.random_range(1..=3),
                gamma: rng.random_range(0.2..1.0),
                include_order_zero: rng.random(),
            },
        )
    } else {
        (
            OperatorKind::InDegreeLaplacian,
            FilterBankSpec::Resolvent {
                max_power: rng.random_range(1..=3),
                pole: C64::new(-rng.random_range(0.5..2.0), 0.0),
            },
        )
    };
    let readout = if rng.random::<bool>() {
        ReadoutKind::None
    } else {
        ReadoutKind::Node {
            outputs: rng.random_range(1..=3),
        }
    };
    let cfg = ModelConfig {
        operator,
        forward_bank: bank,
        backward_bank: bank,
        alpha: rng.random_range(0.0..1.0),
        rho: if rng.random::<bool>() {
            Nonlinearity::SplitRelu
        } else {
            Nonlinearity::SplitAbs
        },
        field: ScalarField::Complex,
        input_dim,
        widths,
        readout,
    };
    (cfg, input_dim)
}

fn output_matrix(out: ModelOutput) -> DMatrix<C64> {
    match out {
        // real features are compared as they are; complex ones as [Re | Im]
        ModelOutput::Features(x) if x.is_real() => x.re().map(|v| C64::new(v, 0.0)),
        ModelOutput::Features(x) => x.stack_columns().map(|v| C64::new(v, 0.0)),
        ModelOutput::Node(m) | ModelOutput::Graph(m) => m.map(|v| C64::new(v, 0.0)),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    let mut rhos = [0usize; 2];
    for case in 0..50 {
        let (cfg, f) = random_complex_model(&mut rng);
        rhos[(cfg.rho == Nonlinearity::SplitAbs) as usize] += 1;
        let model = HoloNetModel::new(cfg, &mut rng).map_err(|e| e.to_string())?;
        let real = expand_complex_to_real(&model).map_err(|e| format!("case {case}: {e}"))?;
        let n = rng.random_range(2..=12);
        let g = random_digraph(&mut rng, n);
        let x = CMat::from_fn(n, f, |_, _| cplx(&mut rng));
        let a = model
            .forward(&model.prepare(&g).map_err(|e| e.to_string())?, &x)
            .map_err(|e| e.to_string())?;
        let b = real
            .forward(&real.prepare(&g).map_err(|e| e.to_string())?, &CMat::from_real(x.stack_columns()))
            .map_err(|e| e.to_string())?;
        let (a, b) = (output_matrix(a), output_matrix(b));
        if a.shape() != b.shape() {
            return Err(format!("case {case}: shapes {:?} vs {:?}", a.shape(), b.shape()));
        }
        let err = if frob(&a) == 0.0 { frob(&b) } else { rel(&b, &a) };
        worst = worst.max(err);
    }
    if rhos.contains(&0) {
        return Err("both activations must be exercised".into());
    }
    if worst <= 1e-10 {
        Ok(format!("50 models, worst relative mismatch {worst:.1e}"))
    } else {
        Err(format!("worst relative mismatch {worst:.1e} > 1e-10"))
    }
}

fn gradient_tasks(rng: &mut ChaCha8Rng, field: ScalarField) -> (NodeClassificationData, Vec<GraphSample>) {
    let features = |rng: &mut ChaCha8Rng, n: usize| match field {
        ScalarField::Complex => CMat::from_fn(n, 2, |_, _| cplx(rng)),
        ScalarField::Real => CMat::from_real(DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0))),
    };
    let g = random_digraph(rng, 9);
    let node = NodeClassificationData {
        features: features(rng, 9),
        labels: (0..9).map(|_| rng.random_range(0..3)).collect(),
        train_mask: None,
        graph: g,
    };
    let graphs = (0..3)
        .map(|_| {
            let n = rng.random_range(3..=8);
            GraphSample {
                graph: random_digraph(rng, n),
                features: features(rng, n),
                target: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            }
        })
        .collect();
    (node, graphs)
}

/// Directional derivative by central differences against the analytic
/// gradient, along a few random directions.
fn directional_check(model: &HoloNetModel, task: Task<'_>, loss: Loss, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let (_, grad) = loss_and_gradient(model, task, loss).map_err(|e| e.to_string())?;
    let base = model.params_flat();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let v: Vec<f64> = (0..base.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let mut at = |s: f64| -> Result<f64, String> {
            let p: Vec<f64> = base.iter().zip(&v).map(|(b, d)| b + s * d).collect();
            probe.set_params_flat(&p).map_err(|e| e.to_string())?;
            evaluate_loss(&probe, task, loss).map_err(|e| e.to_string())
        };
        let numeric = (at(h)? - at(-h)?) / (2.0 * h);
        let analytic: f64 = grad.iter().zip(&v).map(|(g, d)| g * d).sum();
        worst = worst.max((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8));
    }
    Ok(worst)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    let mut worst_dir = 0.0f64;
    let mut checked = 0;
    for field in [ScalarField::Real, ScalarField::Complex] {
        let (node, graphs) = gradient_tasks(&mut rng, field);
        for (base, readout) in [
            (ModelConfig::fabernet(2, vec![3, 2], ReadoutKind::Node { outputs: 3 }, 2), 0),
            (ModelConfig::dir_resolvnet(2, vec![3, 2], ReadoutKind::Graph { outputs: 2 }, 2), 1),
        ] {
            for rho in [Nonlinearity::SplitRelu, Nonlinearity::SplitAbs] {
                let cfg = ModelConfig { field, rho, ..base.clone() };
                let model = HoloNetModel::new(cfg, &mut rng).map_err(|e| e.to_string())?;
                let (task, loss) = if readout == 0 {
                    (Task::NodeClassification(&node), Loss::CrossEntropy)
                } else {
                    (Task::GraphRegression(&graphs), Loss::Mse)
                };
                let report = gradcheck(&model, task, loss).map_err(|e| e.to_string())?;
                checked += report.per_tensor.len();
                if let Some((name, e)) = report.per_tensor.iter().find(|(_, e)| *e > 1e-5) {
                    return Err(format!("{field} {rho}: tensor {name} error {e:.1e}"));
                }
                worst = worst.max(report.max_relative_error);
                worst_dir = worst_dir.max(directional_check(&model, task, loss, &mut rng)?);
            }
        }
    }
    if worst_dir > 1e-5 {
        return Err(format!("directional derivative mismatch {worst_dir:.1e}"));
    }
    Ok(format!("{checked} tensors, worst {worst:.1e}; directional checks {worst_dir:.1e}"))
}

fn criterion_9() -> Outcome {
    let cfg = DirectionExperimentConfig::default();
    let mut directed = 0.0;
    let mut symmetric = 0.0;
    for seed in 0..5 {
        let o = run_direction_experiment(&cfg, seed).map_err(|e| e.to_string())?;
        directed += o.directed_accuracy / 5.0;
        symmetric += o.symmetric_accuracy / 5.0;
    }
    let msg = format!("mean train accuracy: directed {directed:.3}, symmetrized {symmetric:.3}");
    if directed >= 0.9 && symmetric <= 0.65 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10() -> Outcome {
    let cfg = CoarseExperimentConfig::default();
    let mut ours = Vec::new();
    let mut ablation = Vec::new();
    for seed in 0..5 {
        ours.push(run_coarse_experiment(Architecture::DirResolvNet, &cfg, seed).map_err(|e| e.to_string())?.ratio());
        ablation.push(run_coarse_experiment(Architecture::FaberNet, &cfg, seed).map_err(|e| e.to_string())?.ratio());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&ours), mean(&ablation));
    let msg = format!(
        "mean coarse/fine MAE ratio: Dir-ResolvNet {a:.3} (per seed {ours:.3?}), FaberNet {b:.3} (per seed {ablation:.3?})"
    );
    if a <= 3.0 && a < b {
        Ok(msg)
    } else {
        Err(msg)
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("functional-calculus oracle", criterion_1, Duration::from_secs(30)),
        ("nilpotent path graph", criterion_2, Duration::from_secs(1)),
        ("reaches of the six-node example", criterion_3, Duration::from_secs(1)),
        ("translation operators", criterion_4, Duration::from_secs(5)),
        ("resolvent convergence", criterion_5, Duration::from_secs(60)),
        ("filter and feature convergence", criterion_6, Duration::from_secs(120)),
        ("complex-to-real expansion", criterion_7, Duration::from_secs(30)),
        ("gradient correctness", criterion_8, Duration::from_secs(60)),
        ("direction sensitivity", criterion_9, Duration::from_secs(300)),
        ("coarse-inference robustness", criterion_10, Duration::from_secs(600)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match (&outcome, elapsed <= *budget) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; took longer than {budget:?}")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        // written to the raw handle so the summary shows without --nocapture
        let _ = writeln!(
            std::io::stdout().lock(),
            "criterion {:>2} {status} [{name}] ({:.2}s): {detail}",
            k + 1,
            elapsed.as_secs_f64()
        );
        if status == "FAIL" {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
