//! Property tests for layers, readouts, checkpoints and the experiment
//! harness.

use holonet::cmat::{CMat, C64};
use holonet::coarse::DEFAULT_C_GRID;
use holonet::digraph::DiGraph;
use holonet::experiments::{
    gen_direction_task, gen_two_scale_regression, random_cluster_graph, run_theorem_suite, DeflectionFamily,
    SyntheticTaskSpec, TheoremSuiteConfig,
};
use holonet::nalgebra::DMatrix;
use holonet::network::{
    aggregate, expand_complex_to_real, load_checkpoint, save_checkpoint, Checkpoint, HoloNetModel, ModelConfig,
    ModelOutput, Nonlinearity, ReadoutKind, ScalarField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> DiGraph {
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rng.random::<f64>() < 0.3 {
            rng.random_range(0.2..2.0)
        } else {
            0.0
        }
    });
    let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    DiGraph::from_adjacency(w, mu).unwrap()
}

fn random_cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn shuffle(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    perm
}

/// Rows of `x` moved so that row `i` lands at `perm[i]`.
fn permute_rows(x: &CMat, perm: &[usize]) -> CMat {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    x.select_rows(&inv)
}

fn model(rng: &mut ChaCha8Rng, resolvent: bool, readout: ReadoutKind, field: ScalarField) -> HoloNetModel {
    let mut cfg = if resolvent {
        ModelConfig::dir_resolvnet(2, vec![3, 3], readout, 2)
    } else {
        ModelConfig::fabernet(2, vec![3, 3], readout, 2)
    };
    cfg.field = field;
    cfg.alpha = rng.random_range(0.0..1.0);
    HoloNetModel::new(cfg, rng).unwrap()
}

fn outputs(m: &HoloNetModel, g: &DiGraph, x: &CMat) -> ModelOutput {
    m.forward(&m.prepare(g).unwrap(), x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn aggregation_invariants(seed in any::<u64>(), n in 1usize..15, f in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_cmat(&mut rng, n, f);
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let omega = aggregate(&x, &mu).unwrap();
        prop_assert!(omega.iter().all(|v| *v >= 0.0));
        prop_assert!(aggregate(&CMat::zeros(n, f), &mu).unwrap().iter().all(|v| *v == 0.0));
        let perm = shuffle(&mut rng, n);
        let mut mu_p = vec![0.0; n];
        for i in 0..n {
            mu_p[perm[i]] = mu[i];
        }
        let permuted = aggregate(&permute_rows(&x, &perm), &mu_p).unwrap();
        for (a, b) in omega.iter().zip(&permuted) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn node_outputs_follow_relabelling(seed in any::<u64>(), n in 2usize..12, resolvent in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model(&mut rng, resolvent, ReadoutKind::Node { outputs: 2 }, ScalarField::Complex);
        let g = random_digraph(&mut rng, n);
        let x = random_cmat(&mut rng, n, 2);
        let perm = shuffle(&mut rng, n);
        let a = outputs(&m, &g, &x);
        let b = outputs(&m, &g.permuted(&perm), &permute_rows(&x, &perm));
        let (a, b) = (a.values().unwrap(), b.values().unwrap());
        for i in 0..n {
            for k in 0..a.ncols() {
                prop_assert!((a[(i, k)] - b[(perm[i], k)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn graph_outputs_ignore_relabelling(seed in any::<u64>(), n in 2usize..12, resolvent in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model(&mut rng, resolvent, ReadoutKind::Graph { outputs: 2 }, ScalarField::Complex);
        let g = random_digraph(&mut rng, n);
        let x = random_cmat(&mut rng, n, 2);
        let perm = shuffle(&mut rng, n);
        let a = outputs(&m, &g, &x);
        let b = outputs(&m, &g.permuted(&perm), &permute_rows(&x, &perm));
        prop_assert!((a.values().unwrap() - b.values().unwrap()).amax() <= 1e-10);
    }

    #[test]
    fn unused_direction_is_dead(seed in any::<u64>(), n in 2usize..10, alpha_one in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = model(&mut rng, false, ReadoutKind::None, ScalarField::Complex);
        m.set_alpha(if alpha_one { 1.0 } else { 0.0 }).unwrap();
        let g = random_digraph(&mut rng, n);
        let x = random_cmat(&mut rng, n, 2);
        let before = outputs(&m, &g, &x);
        let mut garbage = m.clone();
        for layer in garbage.layers_mut() {
            let dead = if alpha_one { &mut layer.w_bwd } else { &mut layer.w_fwd };
            for w in dead.iter_mut() {
                *w = CMat::from_fn(w.nrows(), w.ncols(), |_, _| C64::new(1e6, -3e5));
            }
        }
        prop_assert_eq!(outputs(&garbage, &g, &x), before);
    }

    #[test]
    fn expansion_matches_complex_model(seed in any::<u64>(), n in 2usize..10, rho_abs in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = ModelConfig::fabernet(2, vec![3, 2], ReadoutKind::Node { outputs: 2 }, 2);
        cfg.rho = if rho_abs { Nonlinearity::SplitAbs } else { Nonlinearity::SplitRelu };
        cfg.alpha = rng.random_range(0.0..1.0);
        let m = HoloNetModel::new(cfg, &mut rng).unwrap();
        let real = expand_complex_to_real(&m).unwrap();
        let g = random_digraph(&mut rng, n);
        let x = random_cmat(&mut rng, n, 2);
        let a = outputs(&m, &g, &x);
        let b = outputs(&real, &g, &CMat::from_real(x.stack_columns()));
        prop_assert!((a.values().unwrap() - b.values().unwrap()).amax() <= 1e-10);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), resolvent in any::<bool>(), complex in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = if complex { ScalarField::Complex } else { ScalarField::Real };
        let m = model(&mut rng, resolvent, ReadoutKind::Graph { outputs: 1 }, field);
        let back = Checkpoint::from_json(&Checkpoint::from_model(&m).to_json()).unwrap().to_model().unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = model(&mut rng, true, ReadoutKind::Node { outputs: 2 }, ScalarField::Complex);
    let path = std::env::temp_dir().join(format!("holonet-ckpt-{}.json", std::process::id()));
    save_checkpoint(&m, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let g = random_digraph(&mut rng, 7);
    let x = random_cmat(&mut rng, 7, 2);
    assert_eq!(outputs(&back, &g, &x), outputs(&m, &g, &x));
}

#[test]
fn generators_are_pure_functions_of_the_seed() {
    let spec = SyntheticTaskSpec::direction_parity(40, 9);
    assert_eq!(gen_direction_task(&spec).unwrap(), gen_direction_task(&spec).unwrap());
    let spec = SyntheticTaskSpec::two_scale_regression(4, 9);
    assert_eq!(gen_two_scale_regression(&spec).unwrap(), gen_two_scale_regression(&spec).unwrap());
}

#[test]
fn deflection_family_keeps_regular_tier() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (g, _) = random_cluster_graph(&mut rng, 24, 1.0).unwrap();
    let family = DeflectionFamily::from_scales(g.clone(), &DEFAULT_C_GRID).unwrap();
    for (member, &c) in family.members().unwrap().iter().zip(&DEFAULT_C_GRID) {
        assert_eq!(member.w_regular(), g.w_regular());
        assert_eq!(member.w_high(), g.w_high());
        assert_eq!(member.scale(), c);
    }
}

#[test]
fn theorem_suite_is_reproducible_and_tracks_the_resolvent_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (g, _) = random_cluster_graph(&mut rng, 30, 1.0).unwrap();
    let family = DeflectionFamily::from_scales(g, &DEFAULT_C_GRID).unwrap();
    let cfg = TheoremSuiteConfig::dir_resolvnet(5);
    let rows = run_theorem_suite(&family, &cfg).unwrap();
    let again = run_theorem_suite(&family, &cfg).unwrap();
    for (a, b) in rows.iter().zip(&again) {
        assert_eq!(a.node_gap.to_bits(), b.node_gap.to_bits());
        assert_eq!(a.graph_gap.to_bits(), b.graph_gap.to_bits());
        assert_eq!(a.filter_gap.to_bits(), b.filter_gap.to_bits());
    }
    // network gaps stay within a fixed multiple of the resolvent gap
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.c >= 1e2)
        .map(|r| r.node_gap / r.resolvent_gap)
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    assert!(hi / lo < 10.0, "node/resolvent gap ratios {ratios:?}");
}
