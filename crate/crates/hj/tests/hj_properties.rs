use popscale_hj::models::{self, EPSILON_SWEEP};
use popscale_hj::*;
use proptest::prelude::*;

const HORIZON: f64 = 5.0;

fn dp_gap(model: &DiscreteTraitModel, sol: &PhiSolution) -> f64 {
    let schedule = sol.schedule();
    let mut worst: f64 = 0.0;
    for (t, row) in sol.times.iter().zip(&sol.phi) {
        let dp = variational_phi_discrete(model, &schedule, *t);
        for (a, b) in dp.iter().zip(row) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn exact_and_dynamic_programming_solutions_agree_on_packaged_models() {
    for (name, model) in models::packaged() {
        let sol = solve_phi_discrete(&model, HORIZON, 50).unwrap();
        assert!(dp_gap(&model, &sol) < 1e-6, "{name}");
        let truncated = truncated_phi(&model, HORIZON, f64::INFINITY, 50).unwrap();
        for (a, b) in truncated.phi.iter().zip(&sol.phi) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6, "{name}");
            }
        }
        assert_eq!(truncated.catastrophe_times.len(), sol.catastrophe_times.len(), "{name}");
    }
}

#[test]
fn solutions_are_normalized_and_lipschitz() {
    for (name, model) in models::packaged() {
        let sol = solve_phi_discrete(&model, HORIZON, 200).unwrap();
        assert!(sol.normalization_error() < 1e-9, "{name}");
        let max_rate = sol.segments.iter().flat_map(|s| s.rates.iter().map(|r| r.abs())).fold(0.0, f64::max);
        assert!(sol.lipschitz_estimate() <= max_rate + 1e-9, "{name}");
    }
}

#[test]
fn psi_jumps_exactly_at_catastrophes() {
    let model = models::three_state_sweeps();
    let sol = solve_phi_discrete(&model, HORIZON, 100).unwrap();
    assert_eq!(sol.catastrophe_times.len(), 2);
    assert!((sol.catastrophe_times[0] - 1.2).abs() < 1e-12);
    assert!((sol.catastrophe_times[1] - 1.6).abs() < 1e-12);
    for (seg, tc) in sol.segments.iter().skip(1).zip(&sol.catastrophe_times) {
        assert_eq!(seg.start, *tc);
        assert_eq!(sol.psi_at(*tc), seg.resources);
        assert_ne!(sol.psi_at(tc - 1e-9), seg.resources);
    }
    for seg in &sol.segments {
        let mid = 0.5 * (seg.start + seg.end);
        assert_eq!(sol.psi_at(mid), seg.resources);
    }
}

#[test]
fn eps_system_approaches_the_limit_on_every_packaged_model() {
    for (name, model) in models::packaged() {
        let sol = solve_phi_discrete(&model, HORIZON, 100).unwrap();
        let gaps: Vec<f64> = EPSILON_SWEEP
            .iter()
            .map(|&eps| {
                let opts = EpsSolverOptions { samples: 100, ..Default::default() };
                solve_u_eps_discrete(&model, eps, HORIZON, opts).unwrap().sup_distance(&sol)
            })
            .collect();
        if name == "single_type" {
            assert!(gaps.iter().all(|g| *g < 1e-6));
        } else {
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{name}: {gaps:?}");
        }
    }
}

#[test]
fn symmetric_types_have_identical_trajectories() {
    let model = DiscreteTraitModel::new(
        vec![vec![0.0, 0.7], vec![0.7, 0.0]],
        Growth::Linear { base: vec![1.0, 1.0], slopes: vec![vec![1.0]; 2] },
        vec![vec![1.0, 1.0]],
        vec![0.3, 0.3],
    )
    .unwrap();
    let traj = solve_u_eps_discrete(&model, 0.05, 2.0, EpsSolverOptions::default()).unwrap();
    for row in &traj.log_u {
        assert!((row[0] - row[1]).abs() <= 1e-12 * row[0].abs().max(1.0));
    }
    // Total mass relaxes to the single-type equilibrium.
    let last = traj.masses(traj.times.len() - 1);
    assert!((last[0] + last[1] - 1.0).abs() < 1e-6);
}

#[test]
fn equilibria_restrict_to_their_support() {
    for (name, model) in models::packaged() {
        let n = model.types();
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let Ok(eq) = lv_equilibrium(&model, &set) else { continue };
            let restricted = lv_equilibrium(&model, &eq.support).unwrap();
            assert_eq!(restricted.support, eq.support, "{name} {set:?}");
            for (a, b) in restricted.masses.iter().zip(&eq.masses) {
                assert!((a - b).abs() < 1e-10, "{name} {set:?}");
            }
        }
    }
}

#[test]
fn specialists_coexist_until_the_generalist_invades() {
    let model = models::two_resource_community();
    let specialists = lv_equilibrium(&model, &[0, 1]).unwrap();
    assert_eq!(specialists.support, vec![0, 1]);
    assert!(model.rate(2, &specialists.resources) > 0.0);
    let all = lv_equilibrium(&model, &[0, 1, 2, 3]).unwrap();
    assert_eq!(all.support, vec![2]);
}

#[test]
fn lower_floor_delays_invasion() {
    let model = models::two_state_invasion();
    let mut last = 0.0;
    for floor in [f64::INFINITY, 4.0, 2.0, 1.5, 1.01, 0.99, 0.5] {
        let sol = truncated_phi(&model, 4.0, floor, 200).unwrap();
        let arrival = sol.catastrophe_times.first().copied().unwrap_or(f64::INFINITY);
        assert!(arrival >= last, "floor {floor}: {arrival} < {last}");
        last = arrival;
    }
    assert_eq!(last, f64::INFINITY);
}

#[test]
fn floor_below_initial_gap_marks_unreachable_types() {
    let model = models::three_state_sweeps();
    let sol = truncated_phi(&model, 1.0, 0.5, 10).unwrap();
    assert_eq!(sol.phi[0][1], f64::NEG_INFINITY);
    assert_eq!(sol.phi[0][2], f64::NEG_INFINITY);
    assert_eq!(sol.phi[0][0], 0.0);
}

#[test]
fn heat_equation_profile_decays_at_the_analytic_rate() {
    let eps = 0.1;
    let sol = solve_u_eps_continuous(&models::continuous_heat(eps, 400), 0.5, 1e-3, 5).unwrap();
    let k = 2.0 * std::f64::consts::PI;
    for (n, t) in sol.times.iter().enumerate() {
        for (p, u) in sol.u[n].iter().enumerate() {
            let x = sol.point(p)[0];
            let exact = 1.0 + 0.5 * (-(eps / 2.0) * k * k * t).exp() * (k * x).cos();
            assert!((u - exact).abs() < 1e-3);
        }
    }
}

#[test]
fn flat_profiles_stay_flat() {
    let mut model = models::continuous_quadratic_1d(0.05);
    model.fitness.curvature = 0.0;
    model.initial = InitialExponent::Quadratic { center: vec![0.0], curvature: 0.0 };
    model.burn_in = 10.0;
    let sol = solve_u_eps_continuous(&model, 1.0, 0.005, 4).unwrap();
    for row in &sol.u {
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(0.0, f64::max);
        assert!(hi - lo <= 1e-12 * hi);
    }
}

/// Root of `ψ ↦ R(x⋆, ψ)` by bisection.
fn resource_root(model: &ContinuousHjModel) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.fitness.rate(&model.fitness.optimum, &[mid]) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn resource_level_settles_at_the_root_for_the_fittest_trait() {
    let model = models::continuous_quadratic_1d(0.02);
    let target = resource_root(&model);
    let sol = solve_u_eps_continuous(&model, 6.0, 0.002, 6).unwrap();
    let psi = sol.psi.last().unwrap()[0];
    assert!((psi - target).abs() < 0.02 * target, "{psi} vs {target}");
}

#[test]
fn normalized_phi_is_cauchy_along_the_sweep_and_the_front_moves_to_the_optimum() {
    let finals: Vec<Vec<f64>> = EPSILON_SWEEP
        .iter()
        .map(|&eps| {
            let model = models::continuous_quadratic_1d(eps);
            let sol = solve_u_eps_continuous(&model, 3.0, 0.1 * eps, 30).unwrap();
            let front: Vec<f64> = (0..sol.times.len()).map(|n| sol.dominant_trait(n)[0]).collect();
            assert!(front.windows(2).all(|w| w[1] >= w[0]), "eps {eps}: {front:?}");
            assert!(front.iter().all(|x| *x <= 0.4 + 1e-9));
            sol.phi(sol.times.len() - 1).normalized
        })
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dist(&finals[1], &finals[2]) < dist(&finals[0], &finals[1]));
}

#[test]
fn two_dimensional_front_approaches_the_optimum() {
    let sol = solve_u_eps_continuous(&models::continuous_quadratic_2d(0.05), 2.0, 0.005, 4).unwrap();
    let dist = |x: &[f64]| ((x[0] - 0.4).powi(2) + (x[1] - 0.2).powi(2)).sqrt();
    let d: Vec<f64> = (0..=4).map(|n| dist(&sol.dominant_trait(n))).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{d:?}");
    assert!(sol.u.iter().flatten().all(|v| *v >= 0.0));
}

#[test]
fn leaving_the_confinement_box_is_reported() {
    let mut model = models::continuous_quadratic_1d(0.05);
    model.psi_bounds = (4.0, 8.0);
    let err = solve_u_eps_continuous(&model, 3.0, 0.005, 3).unwrap_err();
    assert!(matches!(err, HjError::Confinement { .. }));
}

fn random_model() -> impl Strategy<Value = DiscreteTraitModel> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.3f64..2.0, n), n),
            prop::collection::vec(0.5f64..2.0, n),
            prop::collection::vec(0.5f64..1.5, n),
            prop::collection::vec(0.0f64..1.5, n),
            0..n,
        )
            .prop_map(move |(mut costs, base, weights, mut h, resident)| {
                for (k, row) in costs.iter_mut().enumerate() {
                    row[k] = 0.0;
                }
                h[resident] = 0.0;
                DiscreteTraitModel::new(costs, Growth::Linear { base, slopes: vec![vec![1.0]; n] }, vec![weights], h)
                    .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_models_agree_with_dynamic_programming(model in random_model()) {
        let sol = solve_phi_discrete(&model, 3.0, 12).unwrap();
        prop_assert!(sol.normalization_error() < 1e-9);
        prop_assert!(dp_gap(&model, &sol) < 1e-6);
    }

    #[test]
    fn growth_decreases_in_every_resource(
        base in prop::collection::vec(-1.0f64..2.0, 3),
        psi in prop::collection::vec(0.0f64..3.0, 2),
        bump in 1e-3f64..1.0,
        which in 0usize..2,
    ) {
        let model = models::two_resource_community();
        let growth = Growth::Linear {
            base,
            slopes: match &model.growth { Growth::Linear { slopes, .. } => slopes[..3].to_vec(), _ => unreachable!() },
        };
        let mut higher = psi.clone();
        higher[which] += bump;
        for k in 0..3 {
            prop_assert!(growth.rate(k, &higher) < growth.rate(k, &psi));
        }
    }

    #[test]
    fn eps_trajectories_stay_positive_and_finite(model in random_model(), eps in 0.05f64..0.3) {
        let opts = EpsSolverOptions { samples: 10, ..Default::default() };
        let traj = solve_u_eps_discrete(&model, eps, 1.0, opts).unwrap();
        prop_assert!(traj.log_u.iter().flatten().all(|v| v.is_finite()));
    }
}
