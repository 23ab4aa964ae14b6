use serde::{Deserialize, Serialize};

use crate::{FvOperator, GridMeasure, GroupSelError, PenalizedWfModel, Result};

/// Explicit splitting scheme for the measure-valued limit: a conservative
/// transport step that feeds the atoms, reweighting by `exp(r dt)`, and
/// renormalization to a probability measure.
#[derive(Clone, Debug)]
pub struct LimitStepper {
    op: FvOperator,
    growth_cells: Vec<f64>,
    growth0: f64,
    growth1: f64,
    dt: f64,
    scratch: Vec<f64>,
}

impl LimitStepper {
    pub fn new(model: &PenalizedWfModel, cells: usize, dt: f64) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0) {
            return Err(GroupSelError::param("dt", format!("must be positive, got {dt}")));
        }
        let op = FvOperator::transport(model, cells);
        let max_dt = op.max_explicit_dt();
        if dt > max_dt {
            return Err(GroupSelError::Cfl { dt, max_dt });
        }
        let h = 1.0 / cells as f64;
        let growth_cells = (0..cells).map(|i| (model.r((i as f64 + 0.5) * h) * dt).exp()).collect();
        Ok(Self {
            op,
            growth_cells,
            growth0: (model.r(0.0) * dt).exp(),
            growth1: (model.r(1.0) * dt).exp(),
            dt,
            scratch: vec![0.0; cells],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Transport then reweight, without renormalizing.
    pub fn step_unnormalized(&mut self, mu: &mut GridMeasure) {
        self.step_unnormalized_with(mu, self.dt);
    }

    fn step_unnormalized_with(&mut self, mu: &mut GridMeasure, dt: f64) {
        let frac = dt / self.dt;
        self.op.apply(&mu.density, &mut self.scratch);
        mu.atom0 += dt * self.op.outflow0 * mu.density[0];
        mu.atom1 += dt * self.op.outflow1 * mu.density[mu.density.len() - 1];
        for ((p, d), g) in mu.density.iter_mut().zip(&self.scratch).zip(&self.growth_cells) {
            *p = (*p + dt * d).max(0.0) * g.powf(frac);
        }
        mu.atom0 *= self.growth0.powf(frac);
        mu.atom1 *= self.growth1.powf(frac);
    }

    pub fn step(&mut self, mu: &mut GridMeasure) {
        self.step_unnormalized(mu);
        let m = mu.mass();
        mu.scale(1.0 / m);
    }

    /// Advances by `t`, taking a shortened last step if `t` is not a
    /// multiple of the step.
    pub fn advance(&mut self, mu: &mut GridMeasure, t: f64) {
        self.advance_observed(mu, t, |_, _| {});
    }

    /// As [`Self::advance`], calling `observe(time, measure)` after every step.
    pub fn advance_observed(&mut self, mu: &mut GridMeasure, t: f64, mut observe: impl FnMut(f64, &GridMeasure)) {
        let full = (t / self.dt * (1.0 + 1e-12)).floor() as usize;
        let mut now = 0.0;
        for k in 0..full {
            self.step(mu);
            now = (k + 1) as f64 * self.dt;
            observe(now, mu);
        }
        let rest = t - now;
        if rest > 1e-12 * self.dt.max(t) {
            self.step_unnormalized_with(mu, rest);
            let m = mu.mass();
            mu.scale(1.0 / m);
            observe(t, mu);
        }
    }
}

/// Default explicit step: a fixed fraction of the admissible step.
pub fn default_dt(model: &PenalizedWfModel, cells: usize) -> f64 {
    0.9 * FvOperator::transport(model, cells).max_explicit_dt()
}

/// Solution of the limit equation at time `t` started from `mu0`.
pub fn evolve_limit_measure(mu0: &GridMeasure, model: &PenalizedWfModel, t: f64, dt: f64) -> Result<GridMeasure> {
    mu0.validate()?;
    if !(t >= 0.0) {
        return Err(GroupSelError::param("t", format!("must be nonnegative, got {t}")));
    }
    let mut stepper = LimitStepper::new(model, mu0.grid_size(), dt)?;
    let mut mu = mu0.clone();
    stepper.advance(&mut mu, t);
    Ok(mu)
}

/// Outcome of [`truncation_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TruncationOutcome {
    Completed {
        /// First time the atom at 1 outweighs the atom at 0.
        upheaval_time: Option<f64>,
        final_measure: GridMeasure,
        /// Cells with positive mass at the end.
        surviving_cells: Vec<usize>,
        /// Natural logarithm of each cell mass at the end (`-inf` for removed cells).
        log_cell_mass: Vec<f64>,
    },
    TotalTruncation {
        time: f64,
    },
}

/// Evolves the limit equation while removing, after every step, each atom
/// and cell whose mass falls below `threshold`.
pub fn truncation_experiment(
    mu0: &GridMeasure,
    model: &PenalizedWfModel,
    threshold: f64,
    t: f64,
    dt: f64,
) -> Result<TruncationOutcome> {
    mu0.validate()?;
    if !(threshold >= 0.0) {
        return Err(GroupSelError::param("threshold", format!("must be nonnegative, got {threshold}")));
    }
    let mut stepper = LimitStepper::new(model, mu0.grid_size(), dt)?;
    let h = mu0.cell_width();
    let mut mu = mu0.clone();
    let mut upheaval = (mu.atom1 > mu.atom0).then_some(0.0);
    let truncate = |mu: &mut GridMeasure| -> bool {
        if mu.atom0 < threshold {
            mu.atom0 = 0.0;
        }
        if mu.atom1 < threshold {
            mu.atom1 = 0.0;
        }
        for p in mu.density.iter_mut() {
            if *p * h < threshold {
                *p = 0.0;
            }
        }
        let m = mu.mass();
        if m > 0.0 {
            mu.scale(1.0 / m);
            true
        } else {
            false
        }
    };
    if !truncate(&mut mu) {
        return Ok(TruncationOutcome::TotalTruncation { time: 0.0 });
    }
    let steps = (t / dt).ceil() as usize;
    for k in 0..steps {
        let this_dt = dt.min(t - k as f64 * dt);
        if this_dt <= 0.0 {
            break;
        }
        if this_dt < dt {
            stepper.step_unnormalized_with(&mut mu, this_dt);
        } else {
            stepper.step_unnormalized(&mut mu);
        }
        let now = (k as f64 * dt + this_dt).min(t);
        if !truncate(&mut mu) {
            return Ok(TruncationOutcome::TotalTruncation { time: now });
        }
        if upheaval.is_none() && mu.atom1 > mu.atom0 {
            upheaval = Some(now);
        }
    }
    let surviving_cells = mu.density.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i).collect();
    let log_cell_mass = mu.density.iter().map(|p| (p * h).ln()).collect();
    Ok(TruncationOutcome::Completed { upheaval_time: upheaval, final_measure: mu, surviving_cells, log_cell_mass })
}

/// Total-variation distance between the law conditioned on staying in the
/// interior (no fixation, no death) and `alpha`, recorded every `every`
/// time units up to `t`.
///
/// Uses implicit Euler on the killed generator, whose iteration matrix has
/// exactly the eigenvectors of the generator, so the conditioned law
/// converges to the grid QSD without a splitting floor.
pub fn conditioned_tv_decay(
    model: &PenalizedWfModel,
    start: &GridMeasure,
    alpha: &GridMeasure,
    t: f64,
    every: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    start.validate()?;
    model.validate()?;
    if start.grid_size() != alpha.grid_size() {
        return Err(GroupSelError::param("alpha", "grid sizes differ"));
    }
    if !(dt > 0.0) || dt > every {
        return Err(GroupSelError::param("dt", format!("must lie in (0, every], got {dt}")));
    }
    let op = FvOperator::with_growth(&model.shifted_nonpositive(), start.grid_size());
    let h = start.cell_width();
    let normalize = |p: Vec<f64>| -> Result<Vec<f64>> {
        let m = p.iter().sum::<f64>() * h;
        if !(m > 0.0) {
            return Err(GroupSelError::InvalidMeasure("interior mass vanished".into()));
        }
        Ok(p.into_iter().map(|v| v / m).collect())
    };
    let mut p = normalize(start.density.clone())?;
    let mut out = vec![(0.0, crate::tv_distance(&p, &alpha.density, h))];
    let record_steps = (every / dt).round().max(1.0) as usize;
    let total_steps = (t / dt).round() as usize;
    for k in 1..=total_steps {
        p = normalize(op.solve_implicit(dt, &p))?;
        if k % record_steps == 0 {
            out.push((k as f64 * dt, crate::tv_distance(&p, &alpha.density, h)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Penalty;

    fn model(r: Penalty) -> PenalizedWfModel {
        PenalizedWfModel::new(1.0, 1.0, r).unwrap()
    }

    #[test]
    fn dirac_at_zero_is_stationary() {
        let m = model(Penalty::Linear { at0: -1.0, at1: 0.0 });
        let mu0 = GridMeasure::dirac0(100);
        let dt = default_dt(&m, 100);
        let mu = evolve_limit_measure(&mu0, &m, 2.0, dt).unwrap();
        assert_eq!(mu, mu0);
    }

    #[test]
    fn two_atoms_ratio_grows_exponentially() {
        let m = model(Penalty::Linear { at0: -1.0, at1: 0.0 });
        let mu0 = GridMeasure::two_atoms(0.7, 50).unwrap();
        let dt = default_dt(&m, 50);
        for t in [1.0, 2.5, 5.0] {
            let mu = evolve_limit_measure(&mu0, &m, t, dt).unwrap();
            let ratio = (mu.atom1 / mu.atom0) / (0.3 / 0.7);
            assert!((ratio / t.exp() - 1.0).abs() < 0.02, "t = {t}");
        }
    }

    #[test]
    fn cfl_violation_names_admissible_step() {
        let m = model(Penalty::Constant { value: 0.0 });
        let err = LimitStepper::new(&m, 100, 1.0).unwrap_err();
        match err {
            GroupSelError::Cfl { max_dt, .. } => assert!(max_dt > 0.0 && max_dt < 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mass_stays_one() {
        let m = model(Penalty::Hump { height: 5.0 });
        let mut mu = GridMeasure::uniform(80);
        let mut st = LimitStepper::new(&m, 80, default_dt(&m, 80)).unwrap();
        st.advance_observed(&mut mu, 0.5, |_, mu| {
            assert!((mu.mass() - 1.0).abs() < 1e-8);
            assert!(mu.density.iter().all(|&p| p >= 0.0));
        });
    }

    #[test]
    fn zero_threshold_matches_plain_evolution() {
        let m = model(Penalty::Linear { at0: -1.0, at1: 0.0 });
        let mu0 = GridMeasure::from_density_fn(60, |x| (1.0 - x).powi(3)).unwrap();
        let dt = default_dt(&m, 60);
        let plain = evolve_limit_measure(&mu0, &m, 1.0, dt).unwrap();
        match truncation_experiment(&mu0, &m, 0.0, 1.0, dt).unwrap() {
            TruncationOutcome::Completed { final_measure, .. } => {
                assert!((final_measure.atom0 - plain.atom0).abs() < 1e-6);
                assert!((final_measure.atom1 - plain.atom1).abs() < 1e-6);
                for (a, b) in final_measure.density.iter().zip(&plain.density) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_threshold_truncates_everything() {
        let m = model(Penalty::Linear { at0: -1.0, at1: 0.0 });
        let mu0 = GridMeasure::uniform(20);
        let out = truncation_experiment(&mu0, &m, 1.0, 1.0, default_dt(&m, 20)).unwrap();
        assert!(matches!(out, TruncationOutcome::TotalTruncation { .. }));
    }
}
