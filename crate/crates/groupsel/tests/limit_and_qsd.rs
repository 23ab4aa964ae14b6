use popscale_core::stats::line_fit;
use popscale_core::RngStream;
use popscale_groupsel::*;
use proptest::prelude::*;

#[test]
fn rho_alpha_stable_under_refinement() {
    for m in [scenarios::polymorphic(), scenarios::fixation_c(), scenarios::fixation_d()] {
        let coarse = compute_qsd(&m, 100).unwrap();
        let fine = compute_qsd(&m, 400).unwrap();
        assert!((coarse.rho_alpha / fine.rho_alpha - 1.0).abs() < 0.01);
        assert!(fine.residual <= 1e-6);
        assert!(fine.zeta > 0.0);
    }
}

#[test]
fn conditioned_law_converges_at_spectral_gap() {
    for m in [scenarios::polymorphic(), scenarios::fixation_c(), scenarios::fixation_d()] {
        let q = compute_qsd(&m, 200).unwrap();
        let start = scenarios::defector_heavy_start(200);
        let tv = conditioned_tv_decay(&m, &start, &q.alpha, 8.0, 0.05, 1e-3).unwrap();
        let (ts, ls): (Vec<f64>, Vec<f64>) =
            tv.iter().filter(|(_, d)| (1e-8..1e-2).contains(d)).map(|(t, d)| (*t, d.ln())).unzip();
        assert!(ts.len() > 10);
        let rate = -line_fit(&ts, &ls).slope;
        assert!((rate / q.zeta - 1.0).abs() < 0.15, "rate {rate} vs zeta {}", q.zeta);
    }
}

#[test]
fn feynman_kac_agrees_with_grid() {
    let m = scenarios::fixation_c();
    let fine = evolve_limit_measure(&scenarios::feynman_kac_start(200), &m, 1.0, default_dt(&m, 200)).unwrap();
    let coarse = evolve_limit_measure(&scenarios::feynman_kac_start(100), &m, 1.0, default_dt(&m, 100)).unwrap();
    let mu0 = scenarios::feynman_kac_start(200);
    let est = feynman_kac_estimate(&mu0, &m, 1.0, |x| x, 4000, 1e-3, 11).unwrap();
    let se = (est.std_error.powi(2) + (fine.mean() - coarse.mean()).powi(2)).sqrt();
    assert!((est.value - fine.mean()).abs() <= 3.0 * se);
    assert!(!est.low_ess);
}

#[test]
fn shift_changes_no_classification_output() {
    let m = scenarios::polymorphic();
    let cfg = ExitSplitConfig { paths: 2000, dt: 1e-3, seed: 4 };
    let a = classify_regime(&m, 200, Some(cfg)).unwrap();
    let b = classify_regime(&m.with_added_constant(-7.5), 200, Some(cfg)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn monte_carlo_exit_split_matches_grid_flux() {
    let m = scenarios::polymorphic();
    let q = compute_qsd(&m, 200).unwrap();
    let split = exit_split_mc(&m, &q, 10_000, 1e-3, 8).unwrap();
    assert!((split.p0 - q.exit_split0()).abs() < 4.0 * split.se0 + 0.002);
    assert!((split.p1 - q.exit_split1()).abs() < 4.0 * split.se1 + 0.002);
}

#[test]
fn noise_drives_extinction_rate_up() {
    let scan = scan_sigma(&scenarios::fixation_c(), &scenarios::SIGMA_SCAN, 200).unwrap();
    assert!(scan.increasing, "{scan:?}");
    assert!(scan.exceeds_at.is_some());
}

#[test]
fn upheaval_time_nondecreasing_in_threshold() {
    let m = scenarios::fixation_c();
    let mu0 = scenarios::defector_heavy_start(200);
    let dt = default_dt(&m, 200);
    let mut last = 0.0;
    for th in [0.0, 1e-12, 1e-9, 1e-6, 1e-4] {
        let time = match truncation_experiment(&mu0, &m, th, 20.0, dt).unwrap() {
            TruncationOutcome::Completed { upheaval_time, .. } => upheaval_time.unwrap_or(f64::INFINITY),
            TruncationOutcome::TotalTruncation { .. } => f64::INFINITY,
        };
        assert!(time >= last, "threshold {th}: {time} < {last}");
        last = time;
    }
}

#[test]
fn ibm_tracks_limit_on_average() {
    let m = scenarios::fixation_c();
    let mu0 = scenarios::feynman_kac_start(200);
    let lim = evolve_limit_measure(&mu0, &m, 0.5, default_dt(&m, 200)).unwrap();
    let mut totals = [0.0; 2];
    for seed in 0..10 {
        for (k, size) in [50u32, 200].into_iter().enumerate() {
            let mut rng = RngStream::new(seed, size as u64);
            let st = NestedMoranState::from_limit(&m, size as usize, size, &mu0, &mut rng).unwrap();
            let snap = &simulate_nested_moran(&st, &[0.5], &mut rng).unwrap()[0];
            totals[k] += snap.wasserstein1(&lim);
        }
    }
    assert!(totals[1] < totals[0]);
}

fn arb_model() -> impl Strategy<Value = PenalizedWfModel> {
    (0.0f64..3.0, 0.3f64..2.0, -3.0f64..3.0, -3.0f64..3.0)
        .prop_map(|(s, sigma, a, b)| PenalizedWfModel::new(s, sigma, Penalty::Linear { at0: a, at1: b }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_preserves_probability(model in arb_model(), w0 in 0.0f64..0.5, w1 in 0.0f64..0.5) {
        let mut mu = GridMeasure::from_unnormalized(w0, w1, vec![1.0; 40]).unwrap();
        let mut st = LimitStepper::new(&model, 40, default_dt(&model, 40)).unwrap();
        for _ in 0..200 {
            st.step(&mut mu);
            prop_assert!((mu.mass() - 1.0).abs() < 1e-8);
            prop_assert!(mu.atom0 >= 0.0 && mu.atom1 >= 0.0);
            prop_assert!(mu.density.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn qsd_is_a_probability_eigenpair(model in arb_model(), c in -5.0f64..5.0) {
        let q = compute_qsd(&model, 60).unwrap();
        prop_assert!(q.residual <= 1e-6);
        prop_assert!(q.zeta > 0.0);
        prop_assert!((q.alpha.interior_mass() - 1.0).abs() < 1e-10);
        prop_assert!(q.alpha.density.iter().all(|&a| a >= 0.0));
        let pairing = q.alpha.density.iter().zip(&q.eta).map(|(a, e)| a * e).sum::<f64>() / 60.0;
        prop_assert!((pairing - 1.0).abs() < 1e-10);
        let shifted = compute_qsd(&model.with_added_constant(c), 60).unwrap();
        prop_assert!((shifted.rho_alpha - q.rho_alpha).abs() < 1e-9 * q.rho_alpha.abs().max(1.0));
    }
}
