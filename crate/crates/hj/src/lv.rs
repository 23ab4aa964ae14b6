//! Lotka–Volterra equilibria of the ε-free density dynamics `du_k/dt = u_k·R(k, ψ(u))`.

use nalgebra::{DMatrix, DVector};

use crate::discrete::DiscreteTraitModel;
use crate::error::{HjError, Result};

const NEWTON_TOL: f64 = 1e-13;
const POSITIVE_TOL: f64 = 1e-10;
const STABILITY_TOL: f64 = 1e-10;
const MAX_ENUMERATED: usize = 16;

/// Stable equilibrium of the dynamics restricted to an active set.
#[derive(Debug, Clone, PartialEq)]
pub struct LvEquilibrium {
    pub active: Vec<usize>,
    /// Active types with positive equilibrium mass.
    pub support: Vec<usize>,
    /// Equilibrium mass per type; zero outside the support.
    pub masses: Vec<f64>,
    /// Resource vector `F(A)` of the equilibrium.
    pub resources: Vec<f64>,
}

impl LvEquilibrium {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Unique strongly attractive equilibrium on `active`.
///
/// Every sub-support is tried by damped Newton; a candidate must have positive masses,
/// strictly negative growth for the active types it leaves out, and a Jacobian spectrum
/// in the open left half-plane. Large active sets fall back to relaxation of the ODE.
pub fn lv_equilibrium(model: &DiscreteTraitModel, active: &[usize]) -> Result<LvEquilibrium> {
    let active = normalize_set(model, active)?;
    let mut candidates = Vec::new();
    if active.len() <= MAX_ENUMERATED {
        for mask in 1u32..(1u32 << active.len()) {
            let support: Vec<usize> = (0..active.len()).filter(|b| mask & (1 << b) != 0).map(|b| active[b]).collect();
            if let Some(masses) = newton(model, &support, None) {
                if is_stable(model, &active, &support, &masses) {
                    candidates.push(build(model, &active, support, masses));
                }
            }
        }
    }
    match candidates.len() {
        1 => return Ok(candidates.pop().expect("one candidate")),
        0 => {}
        n => return Err(HjError::AssumptionH { set: active, reason: format!("{n} stable equilibria") }),
    }
    let relaxed = lv_relax(model, &active, 1e4);
    let peak = relaxed.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = active.iter().copied().filter(|&k| relaxed[k] > 1e-6 * peak).collect();
    if let Some(masses) = newton(model, &support, Some(&relaxed)) {
        if is_stable(model, &active, &support, &masses) {
            return Ok(build(model, &active, support, masses));
        }
    }
    Err(HjError::AssumptionH { set: active, reason: "no strongly attractive equilibrium".into() })
}

/// Relaxes the dynamics on `active` from uniform unit masses for up to `horizon` time units.
pub fn lv_relax(model: &DiscreteTraitModel, active: &[usize], horizon: f64) -> Vec<f64> {
    let mut u = vec![0.0; model.types()];
    for &k in active {
        u[k] = 1.0;
    }
    let mut t = 0.0;
    while t < horizon {
        let psi = model.resource_levels(&u);
        let rates: Vec<f64> = active.iter().map(|&k| model.rate(k, &psi)).collect();
        let worst = active.iter().zip(&rates).filter(|(&k, _)| u[k] > 1e-300).map(|(_, r)| r.abs()).fold(0.0, f64::max);
        if worst < 1e-14 {
            break;
        }
        let stiffness = active
            .iter()
            .map(|&k| {
                (0..model.resources()).map(|i| model.growth.sensitivity(k, i, &psi).abs() * psi[i].abs()).sum::<f64>()
            })
            .fold(worst, f64::max);
        let dt = (0.2 / stiffness).min(horizon - t);
        for (&k, r) in active.iter().zip(&rates) {
            u[k] *= (r * dt).exp();
        }
        t += dt;
    }
    u
}

fn normalize_set(model: &DiscreteTraitModel, active: &[usize]) -> Result<Vec<usize>> {
    let mut set = active.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return Err(HjError::param("active", "active set must be nonempty"));
    }
    if set.iter().any(|&k| k >= model.types()) {
        return Err(HjError::param("active", "type index out of range"));
    }
    Ok(set)
}

fn newton(model: &DiscreteTraitModel, support: &[usize], start: Option<&[f64]>) -> Option<Vec<f64>> {
    let n = support.len();
    if n == 0 {
        return None;
    }
    let mut u = vec![0.0; model.types()];
    for &k in support {
        u[k] = start.map_or(1.0, |s| s[k].max(1e-3));
    }
    let residual = |u: &[f64]| -> DVector<f64> {
        let psi = model.resource_levels(u);
        DVector::from_iterator(n, support.iter().map(|&k| model.rate(k, &psi)))
    };
    let mut f = residual(&u);
    for _ in 0..200 {
        let norm = f.norm();
        if norm < NEWTON_TOL {
            return Some(u);
        }
        let psi = model.resource_levels(&u);
        let jac = DMatrix::from_fn(n, n, |a, b| {
            (0..model.resources())
                .map(|i| model.growth.sensitivity(support[a], i, &psi) * model.kernels[i][support[b]])
                .sum()
        });
        let step = jac.lu().solve(&(-&f))?;
        let mut damping = 1.0;
        loop {
            let mut trial = u.clone();
            for (a, &k) in support.iter().enumerate() {
                trial[k] += damping * step[a];
            }
            let ft = residual(&trial);
            if ft.norm() < norm || damping < 1e-6 {
                u = trial;
                f = ft;
                break;
            }
            damping *= 0.5;
        }
    }
    (f.norm() < 1e-9).then_some(u)
}

fn is_stable(model: &DiscreteTraitModel, active: &[usize], support: &[usize], masses: &[f64]) -> bool {
    if support.iter().any(|&k| !(masses[k] > POSITIVE_TOL)) {
        return false;
    }
    let psi = model.resource_levels(masses);
    let outside_declines =
        active.iter().filter(|k| !support.contains(k)).all(|&k| model.rate(k, &psi) < -STABILITY_TOL);
    if !outside_declines {
        return false;
    }
    let n = active.len();
    let jac = DMatrix::from_fn(n, n, |a, b| {
        let (k, l) = (active[a], active[b]);
        let own = if a == b { model.rate(k, &psi) } else { 0.0 };
        let feedback: f64 =
            (0..model.resources()).map(|i| model.growth.sensitivity(k, i, &psi) * model.kernels[i][l]).sum();
        own + masses[k] * feedback
    });
    jac.complex_eigenvalues().iter().all(|z| z.re < -STABILITY_TOL)
}

fn build(model: &DiscreteTraitModel, active: &[usize], support: Vec<usize>, masses: Vec<f64>) -> LvEquilibrium {
    let resources = model.resource_levels(&masses);
    LvEquilibrium { active: active.to_vec(), support, masses, resources }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::Growth;

    fn logistic(types: usize) -> DiscreteTraitModel {
        let mut costs = vec![vec![1.0; types]; types];
        for (k, row) in costs.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        DiscreteTraitModel::new(
            costs,
            Growth::Linear { base: vec![1.0; types], slopes: vec![vec![1.0]; types] },
            vec![vec![1.0; types]],
            vec![0.0; types],
        )
        .unwrap()
    }

    #[test]
    fn single_logistic_type() {
        let eq = lv_equilibrium(&logistic(1), &[0]).unwrap();
        assert!((eq.masses[0] - 1.0).abs() < 1e-12);
        assert!((eq.resources[0] - 1.0).abs() < 1e-12);
        assert_eq!(eq.support, vec![0]);
    }

    #[test]
    fn duplicated_types_violate_uniqueness_but_relax_to_single_mass() {
        let model = logistic(2);
        let err = lv_equilibrium(&model, &[0, 1]).unwrap_err();
        assert!(matches!(err, HjError::AssumptionH { ref set, .. } if set == &vec![0, 1]));
        let relaxed = lv_relax(&model, &[0, 1], 1e3);
        assert!((relaxed[0] + relaxed[1] - 1.0).abs() < 1e-9);
        assert!((model.resource_levels(&relaxed)[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weaker_type_is_excluded() {
        let model = DiscreteTraitModel::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Growth::Linear { base: vec![1.0, 2.0], slopes: vec![vec![1.0], vec![1.0]] },
            vec![vec![1.0, 1.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let eq = lv_equilibrium(&model, &[0, 1]).unwrap();
        assert_eq!(eq.support, vec![1]);
        assert_eq!(eq.masses[0], 0.0);
        assert!((eq.resources[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_growth_converges() {
        let model = DiscreteTraitModel::new(
            vec![vec![0.0]],
            Growth::Quadratic { base: vec![2.0], slopes: vec![vec![1.0]], curvature: vec![vec![1.0]] },
            vec![vec![1.0]],
            vec![0.0],
        )
        .unwrap();
        let eq = lv_equilibrium(&model, &[0]).unwrap();
        assert!((eq.masses[0] - 1.0).abs() < 1e-10);
    }
}
