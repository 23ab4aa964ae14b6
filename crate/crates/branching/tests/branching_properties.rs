use popscale_branching::*;
use popscale_core::stats::{jarque_bera, ks_critical_value, ks_statistic, loglog_slope, median, variance};
use popscale_core::RngStream;
use proptest::prelude::*;

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn l2_distance(grid: &[f64], a: &[f64], b: impl Fn(f64) -> f64) -> f64 {
    let sq: Vec<f64> = grid.iter().zip(a).map(|(&y, v)| (v - b(y)).powi(2)).collect();
    let h = grid[1] - grid[0];
    (h * (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[sq.len() - 1]))).sqrt()
}

fn chain_tree(traits: &[f64]) -> LineageTree {
    let nodes = traits
        .iter()
        .enumerate()
        .map(|(i, &x)| LineageNode {
            id: i,
            parent: i.checked_sub(1),
            generation: i as u32,
            trait_at_birth: x,
            birth_time: i as f64,
            lifetime: None,
            path: vec![],
        })
        .collect();
    LineageTree { nodes, growth_exponent: 0.0, path_dt: 0.0 }
}

#[test]
fn mother_machine_lifetimes_are_exponential() {
    let tree =
        simulate_tree(&scenarios::constant_rate(10_000, KeepRule::MotherMachine), &mut RngStream::new(3, 0)).unwrap();
    assert_eq!(tree.generation_sizes(), vec![1; 10_001]);
    let lifetimes: Vec<f64> = tree.nodes.iter().map(|n| n.lifetime.unwrap()).collect();
    let d = ks_statistic(&lifetimes, |t| 1.0 - (-t).exp());
    assert!(d < ks_critical_value(lifetimes.len(), 0.01), "KS {d}");
}

#[test]
fn constant_rate_fit_matches_closed_form() {
    let tree = simulate_tree(&scenarios::constant_rate(9, KeepRule::Full), &mut RngStream::new(4, 0)).unwrap();
    let family = scenarios::constant_rate(0, KeepRule::Full).birth;
    let fit = mle_birth_rate(&tree, &family).unwrap();
    let total: f64 = tree.nodes.iter().map(|n| n.lifetime.unwrap()).sum();
    let expect = tree.len() as f64 / total;
    assert!((fit.theta[0] - expect).abs() < 1e-9 * expect);
    assert!((fit.covariance[0][0] - expect * expect / tree.len() as f64).abs() < 1e-9);
}

#[test]
fn exact_halving_has_unit_split_mean() {
    let tree = simulate_tree(&scenarios::constant_rate(8, KeepRule::Full), &mut RngStream::new(5, 0)).unwrap();
    assert_eq!(tree_mean(&tree, |_, _| 1.0).unwrap(), 1.0);
    assert!((tree_mean(&tree, |p, c| c / p).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn tree_mean_variance_decays_like_inverse_size() {
    let mut sizes = Vec::new();
    let mut variances = Vec::new();
    for g in 6..=11u32 {
        let spec = scenarios::copula_triangular(g);
        let means: Vec<f64> = (0..100)
            .map(|r| {
                let tree = simulate_markov_tree(&spec, &mut RngStream::new(6, ((g as u64) << 32) | r)).unwrap();
                tree_mean(&tree, |_, c| c).unwrap()
            })
            .collect();
        sizes.push(((1u64 << (g + 1)) - 2) as f64);
        variances.push(variance(&means));
    }
    let fit = loglog_slope(&sizes, &variances);
    assert!((fit.slope + 1.0).abs() < 0.15, "slope {}", fit.slope);
}

#[test]
fn tree_mean_ignores_node_order_within_generations() {
    let tree = simulate_markov_tree(&scenarios::copula_triangular(6), &mut RngStream::new(7, 0)).unwrap();
    // Reverse each generation and remap parent ids.
    let mut order: Vec<usize> = (0..tree.len()).collect();
    order.sort_by_key(|&i| (tree.nodes[i].generation, std::cmp::Reverse(i)));
    let mut new_id = vec![0; tree.len()];
    for (k, &old) in order.iter().enumerate() {
        new_id[old] = k;
    }
    let nodes = order
        .iter()
        .enumerate()
        .map(|(k, &old)| {
            let n = &tree.nodes[old];
            LineageNode { id: k, parent: n.parent.map(|p| new_id[p]), ..n.clone() }
        })
        .collect();
    let relabeled = LineageTree { nodes, ..tree.clone() };
    relabeled.validate().unwrap();
    let psi = |p: f64, c: f64| (3.0 * p).sin() + c * c;
    assert!((tree_mean(&tree, psi).unwrap() - tree_mean(&relabeled, psi).unwrap()).abs() < 1e-12);
}

#[test]
fn nu_estimate_recovers_the_mode() {
    let tree = simulate_markov_tree(&scenarios::copula_triangular(13), &mut RngStream::new(8, 0)).unwrap();
    let est = estimate_nu(&tree, &KernelEstimatorConfig::default(), &unit_grid(101)).unwrap();
    assert!((est.mode() - 0.5).abs() < 0.1, "mode {}", est.mode());
    assert!((est.mass() - 1.0).abs() < 0.02);
}

#[test]
fn nu_error_shrinks_with_tree_size() {
    let spec_small = scenarios::independent_beta(9);
    let spec_large = scenarios::independent_beta(13);
    let truth = spec_small.kernel.stationary();
    let grid = unit_grid(201);
    let cfg = KernelEstimatorConfig::default();
    let wins = (0..100u64)
        .filter(|&r| {
            let small = simulate_markov_tree(&spec_small, &mut RngStream::new(9, r)).unwrap();
            let large = simulate_markov_tree(&spec_large, &mut RngStream::new(10, r)).unwrap();
            let e_small = l2_distance(&grid, &estimate_nu(&small, &cfg, &grid).unwrap().values, |y| truth.pdf(y));
            let e_large = l2_distance(&grid, &estimate_nu(&large, &cfg, &grid).unwrap().values, |y| truth.pdf(y));
            e_large < e_small
        })
        .count();
    assert!(wins >= 95, "{wins} of 100");
}

#[test]
fn q_rows_integrate_to_one() {
    let tree = simulate_markov_tree(&scenarios::copula_triangular(13), &mut RngStream::new(11, 0)).unwrap();
    let est = estimate_q(&tree, &KernelEstimatorConfig::default(), &[0.3, 0.5, 0.7], &unit_grid(201)).unwrap();
    for i in 0..3 {
        assert!((est.row_mass(i) - 1.0).abs() < 0.05, "row {i}: {}", est.row_mass(i));
    }
}

#[test]
fn q_rows_agree_under_independent_resampling() {
    let tree = simulate_markov_tree(&scenarios::independent_beta(13), &mut RngStream::new(12, 0)).unwrap();
    let grid_y = unit_grid(101);
    let est = estimate_q(&tree, &KernelEstimatorConfig::default(), &[0.15, 0.3, 0.45], &grid_y).unwrap();
    let truth = scenarios::independent_beta(0).kernel.stationary();
    for row in &est.values {
        assert!(l2_distance(&grid_y, row, |y| truth.pdf(y)) < 0.2);
    }
    for pair in est.values.windows(2) {
        let gap = l2_distance(&grid_y, &pair[0], |_| 0.0).max(1e-12);
        let diff: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect();
        assert!(l2_distance(&grid_y, &diff, |_| 0.0) < 0.15 * gap);
    }
}

#[test]
fn q_estimate_attains_the_anisotropic_rate() {
    let mut sizes = Vec::new();
    let mut rmse = Vec::new();
    let cfg = KernelEstimatorConfig::default();
    for g in 7..=13u32 {
        let spec = scenarios::copula_triangular(g);
        let truth = spec.kernel.density(0.5, 0.5);
        let sq: f64 = (0..100u64)
            .map(|r| {
                let tree = simulate_markov_tree(&spec, &mut RngStream::new(13, ((g as u64) << 32) | r)).unwrap();
                (estimate_q(&tree, &cfg, &[0.5], &[0.5]).unwrap().values[0][0] - truth).powi(2)
            })
            .sum();
        sizes.push(((1u64 << (g + 1)) - 2) as f64);
        rmse.push((sq / 100.0).sqrt());
    }
    let fit = loglog_slope(&sizes, &rmse);
    assert!((fit.slope + 0.25).abs() < 0.15, "slope {} rmse {rmse:?}", fit.slope);
}

#[test]
fn mle_error_decreases_with_tree_size() {
    let levels = mle_coverage_study(&[7, 9, 11], 60, 14).unwrap();
    let medians: Vec<f64> = levels.iter().map(|l| l.median_error).collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn mle_is_asymptotically_normal_with_inverse_fisher_covariance() {
    let level = &mle_coverage_study(&[10], 200, 15).unwrap()[0];
    for j in 0..2 {
        let coord: Vec<f64> = level.scaled_errors.iter().map(|e| e[j]).collect();
        let (_, p) = jarque_bera(&coord);
        assert!(p > 0.01, "coordinate {j}: JB p = {p}");
    }
    let big = simulate_tree(&scenarios::size_growth(15, KeepRule::Full), &mut RngStream::new(16, 0)).unwrap();
    let info = fisher_information(&big, &scenarios::affine_family(), &scenarios::SIZE_GROWTH_THETA).unwrap();
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    let inverse = [[info[1][1] / det, -info[0][1] / det], [-info[1][0] / det, info[0][0] / det]];
    let n = level.scaled_errors.len() as f64;
    let mut empirical = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            empirical[j][k] = level.scaled_errors.iter().map(|e| e[j] * e[k]).sum::<f64>() / n;
        }
    }
    let norm = |m: [[f64; 2]; 2]| m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let diff = [
        [empirical[0][0] - inverse[0][0], empirical[0][1] - inverse[0][1]],
        [empirical[1][0] - inverse[1][0], empirical[1][1] - inverse[1][1]],
    ];
    assert!(norm(diff) < 0.2 * norm(inverse), "empirical {empirical:?} vs {inverse:?}");
}

#[test]
fn median_of_mle_errors_is_finite() {
    let level = &mle_coverage_study(&[6], 10, 17).unwrap()[0];
    assert!(median(&level.scaled_errors.iter().map(|e| e[0]).collect::<Vec<_>>()).is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tree_mean_is_linear(traits in prop::collection::vec(0.0f64..1.0, 2..60), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let tree = chain_tree(&traits);
        let f = |p: f64, c: f64| p * c;
        let g = |p: f64, c: f64| (p - c).exp();
        let lhs = tree_mean(&tree, |p, c| a * f(p, c) + b * g(p, c)).unwrap();
        let rhs = a * tree_mean(&tree, f).unwrap() + b * tree_mean(&tree, g).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn nu_estimate_is_a_density(
        traits in prop::collection::vec(-0.5f64..1.5, 100..300),
        bandwidth in 0.01f64..0.5,
        order in prop::sample::select(vec![2u32, 4]),
    ) {
        let tree = chain_tree(&traits);
        let cfg = KernelEstimatorConfig { bandwidth_nu: Some(bandwidth), kernel_order: order, ..Default::default() };
        let grid: Vec<f64> = (0..=400).map(|i| -1.0 + 4.0 * i as f64 / 400.0).collect();
        let est = estimate_nu(&tree, &cfg, &grid).unwrap();
        prop_assert!(est.values.iter().all(|v| *v >= 0.0));
        let normalized = DensityEstimate { values: est.normalized(), ..est };
        prop_assert!((normalized.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_keep_never_empties_a_generation(p in 0.05f64..0.6, seed in 0u64..1000) {
        let spec = MarkovTreeSpec { keep: KeepRule::Bernoulli { p }, ..scenarios::independent_beta(12) };
        let tree = simulate_markov_tree(&spec, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(tree.generations(), 12);
        prop_assert!(tree.generation_sizes().iter().all(|&s| s > 0));
        tree.validate().unwrap();
    }

    #[test]
    fn q_estimate_is_nonnegative(seed in 0u64..1000, hx in 0.02f64..0.4, hy in 0.02f64..0.4) {
        let tree = simulate_markov_tree(&scenarios::copula_triangular(7), &mut RngStream::new(seed, 0)).unwrap();
        let cfg = KernelEstimatorConfig { bandwidth_q: Some((hx, hy)), kernel_order: 4, ..Default::default() };
        let est = estimate_q(&tree, &cfg, &unit_grid(11), &unit_grid(11)).unwrap();
        prop_assert!(est.values.iter().flatten().all(|v| *v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn simulation_is_reproducible(seed in 0u64..1000) {
        let spec = scenarios::size_growth(4, KeepRule::Bernoulli { p: 0.7 });
        let a = simulate_tree(&spec, &mut RngStream::new(seed, 1)).unwrap();
        let b = simulate_tree(&spec, &mut RngStream::new(seed, 1)).unwrap();
        prop_assert_eq!(a, b);
    }
}
