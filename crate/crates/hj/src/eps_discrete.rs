//! The ε-system on a finite trait space:
//! `du_k/dt = Σ_j exp(−T(k,j)/ε)(u_j − u_k) + u_k·R(k, ψ)/ε`, `ψ^i = Σ_k Ψ^i(k) u_k`.

use crate::discrete::DiscreteTraitModel;
use crate::error::{HjError, Result};
use crate::phi::PhiSolution;

/// Step control for [`solve_u_eps_discrete`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSolverOptions {
    /// Local error tolerance on `ε·log u`.
    pub tolerance: f64,
    /// Number of uniform output intervals.
    pub samples: usize,
}

impl Default for EpsSolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-7, samples: 500 }
    }
}

/// Sampled trajectory of the ε-system, stored as `log u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsTrajectory {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub log_u: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl EpsTrajectory {
    /// `ε·log u(t, k)` on the stored grid.
    pub fn scaled_log(&self) -> Vec<Vec<f64>> {
        self.log_u.iter().map(|row| row.iter().map(|v| self.epsilon * v).collect()).collect()
    }

    pub fn masses(&self, n: usize) -> Vec<f64> {
        self.log_u[n].iter().map(|v| v.exp()).collect()
    }

    /// `sup_{t,k} |ε·log u(t, k) − φ(t, k)|` against an exact limiting solution.
    pub fn sup_distance(&self, limit: &PhiSolution) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, row) in self.times.iter().zip(&self.log_u) {
            let phi = limit.phi_at(*t).expect("exact limiting solution");
            for (v, p) in row.iter().zip(&phi) {
                worst = worst.max((self.epsilon * v - p).abs());
            }
        }
        worst
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// `log((e^{a·dt} − 1)/a)`, continuous at `a = 0`.
fn log_phi1(a: f64, dt: f64) -> f64 {
    let z = a * dt;
    if z.abs() < 1e-10 {
        dt.ln() + 0.5 * z
    } else if z > 0.0 {
        z + (-(-z).exp()).ln_1p() - a.ln()
    } else {
        (-z.exp_m1()).ln() - (-a).ln()
    }
}

struct Stepper<'a> {
    model: &'a DiscreteTraitModel,
    epsilon: f64,
    /// `rates_in[k][j] = exp(−T(k,j)/ε)` in log form.
    log_rates_in: Vec<Vec<(usize, f64)>>,
    outflow: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a DiscreteTraitModel, epsilon: f64) -> Self {
        let n = model.types();
        let mut log_rates_in = vec![Vec::new(); n];
        let mut outflow = vec![0.0; n];
        for k in 0..n {
            for j in 0..n {
                let c = model.costs[k][j];
                if j != k && c.is_finite() {
                    log_rates_in[k].push((j, -c / epsilon));
                    outflow[k] += (-c / epsilon).exp();
                }
            }
        }
        Self { model, epsilon, log_rates_in, outflow }
    }

    fn psi(&self, log_u: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = log_u.iter().map(|v| v.exp()).collect();
        self.model.resource_levels(&u)
    }

    /// Integrating-factor step with resources and mutation influx frozen at the step start.
    fn step(&self, log_u: &[f64], dt: f64) -> Vec<f64> {
        let psi = self.psi(log_u);
        (0..log_u.len())
            .map(|k| {
                let a = self.model.rate(k, &psi) / self.epsilon - self.outflow[k];
                let own = log_u[k] + a * dt;
                let influx =
                    self.log_rates_in[k].iter().fold(f64::NEG_INFINITY, |acc, &(j, lr)| log_add(acc, log_u[j] + lr));
                if influx == f64::NEG_INFINITY {
                    own
                } else {
                    log_add(own, influx + log_phi1(a, dt))
                }
            })
            .collect()
    }
}

/// Integrates the ε-system on `[0, horizon]` from `u(0, k) = exp(−h(k)/ε)`, with `h`
/// shifted to minimum 0.
///
/// Steps are controlled by step doubling on `ε·log u`; the accepted value is the
/// Richardson combination of the full and two half steps.
pub fn solve_u_eps_discrete(
    model: &DiscreteTraitModel,
    epsilon: f64,
    horizon: f64,
    options: EpsSolverOptions,
) -> Result<EpsTrajectory> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(HjError::param("epsilon", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) || options.samples == 0 {
        return Err(HjError::param("horizon", "need a positive horizon and at least one sample"));
    }
    if !(options.tolerance > 0.0) {
        return Err(HjError::param("tolerance", "must be positive"));
    }
    let stepper = Stepper::new(model, epsilon);
    let mut log_u: Vec<f64> = model.normalized_exponent().iter().map(|h| -h / epsilon).collect();
    let out_dt = horizon / options.samples as f64;
    let rate_scale = model.rates(&stepper.psi(&log_u)).iter().map(|r| r.abs()).fold(1.0, f64::max);
    let mut dt = (0.1 * epsilon / rate_scale).min(out_dt);
    let min_dt = 1e-13 * horizon.max(1.0);

    let mut traj = EpsTrajectory {
        epsilon,
        times: vec![0.0],
        log_u: vec![log_u.clone()],
        psi: vec![stepper.psi(&log_u)],
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut now = 0.0;
    for n in 1..=options.samples {
        let target = if n == options.samples { horizon } else { n as f64 * out_dt };
        while now < target {
            let h = dt.min(target - now);
            let full = stepper.step(&log_u, h);
            let half = stepper.step(&stepper.step(&log_u, 0.5 * h), 0.5 * h);
            let err = full.iter().zip(&half).map(|(a, b)| epsilon * (a - b).abs()).fold(0.0, f64::max);
            if err <= options.tolerance {
                for ((v, f), g) in log_u.iter_mut().zip(&full).zip(&half) {
                    *v = 2.0 * g - f;
                }
                now = if h == target - now { target } else { now + h };
                traj.accepted_steps += 1;
            } else {
                traj.rejected_steps += 1;
            }
            let factor = if err > 0.0 { 0.9 * (options.tolerance / err).sqrt() } else { 4.0 };
            dt = h * factor.clamp(0.2, 4.0);
            if dt < min_dt {
                return Err(HjError::StepRejection { time: now, dt, suggested_tol: err * 10.0 });
            }
        }
        traj.times.push(target);
        traj.log_u.push(log_u.clone());
        traj.psi.push(stepper.psi(&log_u));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::Growth;

    #[test]
    fn log_phi1_matches_direct_formula() {
        for &(a, dt) in &[(3.0f64, 0.1f64), (-2.0, 0.5), (1e-12, 0.3), (500.0, 1.0)] {
            let direct = ((a * dt).exp_m1() / a).ln();
            assert!((log_phi1(a, dt) - direct).abs() < 1e-9, "a={a}");
        }
    }

    #[test]
    fn isolated_type_follows_its_own_growth() {
        // u' = u(1 − 2u)/ε from u(0) = 1, so u(t) = 1/(2 − exp(−t/ε)).
        let model = DiscreteTraitModel::new(
            vec![vec![0.0]],
            Growth::Linear { base: vec![1.0], slopes: vec![vec![1.0]] },
            vec![vec![2.0]],
            vec![0.0],
        )
        .unwrap();
        let eps = 0.5;
        let traj = solve_u_eps_discrete(&model, eps, 2.0, EpsSolverOptions { tolerance: 1e-10, samples: 20 }).unwrap();
        for (t, row) in traj.times.iter().zip(&traj.log_u) {
            let exact = 1.0 / (2.0 - (-t / eps).exp());
            assert!((row[0].exp() / exact - 1.0).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn collapsing_step_reports_diagnostic() {
        let model = DiscreteTraitModel::new(
            vec![vec![0.0]],
            Growth::Linear { base: vec![1.0], slopes: vec![vec![1.0]] },
            vec![vec![2.0]],
            vec![0.0],
        )
        .unwrap();
        let err = solve_u_eps_discrete(&model, 1e-3, 1.0, EpsSolverOptions { tolerance: 1e-300, samples: 1 });
        assert!(matches!(err, Err(HjError::StepRejection { .. })));
    }
}
