//! Maximum likelihood for a parametric division rate observed along full trait paths.

use nalgebra::{DMatrix, DVector};

use crate::birth::ParametricBirthFamily;
use crate::error::{BranchingError, NewtonTrace, Result};
use crate::tree::LineageTree;

const MAX_ITERATIONS: usize = 100;
const STEP_TOL: f64 = 1e-10;

/// Per-life sufficient data: division trait, `∫ ∇B ds` over the life.
struct Life {
    division: f64,
    exposure: Vec<f64>,
}

fn lives(tree: &LineageTree, family: &ParametricBirthFamily) -> Result<Vec<Life>> {
    let dt = tree.path_dt;
    let mut out = Vec::new();
    for node in &tree.nodes {
        let (Some(tau), Some(&division)) = (node.lifetime, node.path.last()) else { continue };
        if node.path.len() < 2 || !(dt > 0.0) {
            return Err(BranchingError::Domain(format!("node {} has a lifetime but no trait path", node.id)));
        }
        // Samples sit at k·dt except the last, which is at the division time.
        let d = family.dimension();
        let mut exposure = vec![0.0; d];
        let last = node.path.len() - 1;
        for k in 0..last {
            let t0 = k as f64 * dt;
            let t1 = if k + 1 == last { tau } else { t0 + dt };
            let (g0, g1) = (family.gradient(node.path[k]), family.gradient(node.path[k + 1]));
            for j in 0..d {
                exposure[j] += 0.5 * (t1 - t0) * (g0[j] + g1[j]);
            }
        }
        out.push(Life { division, exposure });
    }
    if out.is_empty() {
        return Err(BranchingError::Domain("tree carries no observed lifetimes".into()));
    }
    Ok(out)
}

/// Log-likelihood, gradient and observed information of the point process at `theta`.
/// `∫ B ds` is the trapezoid integral of the piecewise-linear path, exact for affine rates.
struct Evaluation {
    log_likelihood: f64,
    gradient: DVector<f64>,
    information: DMatrix<f64>,
}

fn evaluate(lives: &[Life], family: &ParametricBirthFamily, theta: &[f64]) -> Option<Evaluation> {
    let d = family.dimension();
    let th = DVector::from_column_slice(theta);
    let mut ll = 0.0;
    let mut gradient = DVector::zeros(d);
    let mut information = DMatrix::zeros(d, d);
    for life in lives {
        let rate = family.rate(theta, life.division);
        if !(rate > 0.0) {
            return None;
        }
        let g = DVector::from_vec(family.gradient(life.division));
        let exposure = DVector::from_column_slice(&life.exposure);
        ll += rate.ln() - th.dot(&exposure);
        gradient += &g / rate - exposure;
        information += &g * g.transpose() / (rate * rate);
    }
    Some(Evaluation { log_likelihood: ll, gradient, information })
}

/// Observed Fisher information per observed life at `theta`.
pub fn fisher_information(tree: &LineageTree, family: &ParametricBirthFamily, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let lives = lives(tree, family)?;
    let eval = evaluate(&lives, family, theta)
        .ok_or_else(|| BranchingError::Domain("division rate vanishes at an observed division".into()))?;
    let n = lives.len() as f64;
    Ok(rows(&(eval.information / n)))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: Vec<f64>,
    /// Inverse observed information.
    pub covariance: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Number of observed lives.
    pub sample_size: usize,
}

impl MleFit {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.theta.len()).map(|i| self.covariance[i][i].sqrt()).collect()
    }

    /// Squared Mahalanobis distance `(ϑ − ϑ̂)ᵀ Σ⁻¹ (ϑ − ϑ̂)` under the fitted covariance.
    pub fn wald_statistic(&self, theta: &[f64]) -> f64 {
        let d = self.theta.len();
        let cov = DMatrix::from_fn(d, d, |i, j| self.covariance[i][j]);
        let diff = DVector::from_fn(d, |i, _| theta[i] - self.theta[i]);
        match cov.cholesky() {
            Some(c) => diff.dot(&c.solve(&diff)),
            None => f64::INFINITY,
        }
    }
}

fn project(family: &ParametricBirthFamily, theta: &mut [f64]) {
    for (t, (l, u)) in theta.iter_mut().zip(family.lower.iter().zip(&family.upper)) {
        *t = t.clamp(*l, *u);
    }
}

/// Projected Newton ascent with backtracking on the concave log-likelihood over the
/// parameter box.
pub fn mle_birth_rate(tree: &LineageTree, family: &ParametricBirthFamily) -> Result<MleFit> {
    family.validate()?;
    let lives = lives(tree, family)?;
    let d = family.dimension();
    let total_time: f64 = lives.iter().map(|l| l.exposure[0]).sum();
    let mut theta = vec![0.0; d];
    theta[0] = lives.len() as f64 / total_time;
    project(family, &mut theta);
    if evaluate(&lives, family, &theta).is_none() {
        theta.copy_from_slice(&family.upper);
    }
    let mut trace = Vec::new();
    for iteration in 0..MAX_ITERATIONS {
        let eval = evaluate(&lives, family, &theta)
            .ok_or_else(|| BranchingError::Domain("division rate vanishes on the parameter box".into()))?;
        trace.push(NewtonTrace {
            iteration,
            theta: theta.clone(),
            log_likelihood: eval.log_likelihood,
            gradient_norm: eval.gradient.norm(),
        });
        // Coordinates pinned at a bound with the gradient pointing outward stay fixed.
        let free: Vec<usize> = (0..d)
            .filter(|&j| {
                let g = eval.gradient[j];
                !((theta[j] <= family.lower[j] && g <= 0.0) || (theta[j] >= family.upper[j] && g >= 0.0))
            })
            .collect();
        let mut direction = DVector::zeros(d);
        if !free.is_empty() {
            let m = free.len();
            let info = DMatrix::from_fn(m, m, |a, b| eval.information[(free[a], free[b])]);
            let grad = DVector::from_fn(m, |a, _| eval.gradient[free[a]]);
            let Some(c) = info.cholesky() else {
                return Err(BranchingError::NoConvergence { trace });
            };
            let reduced = c.solve(&grad);
            for (a, &j) in free.iter().enumerate() {
                direction[j] = reduced[a];
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let mut cand: Vec<f64> = theta.iter().zip(direction.iter()).map(|(t, s)| t + step * s).collect();
            project(family, &mut cand);
            if let Some(e) = evaluate(&lives, family, &cand) {
                if e.log_likelihood >= eval.log_likelihood - 1e-12 * eval.log_likelihood.abs() {
                    accepted = Some(cand);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(BranchingError::NoConvergence { trace });
        };
        let moved = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        theta = next;
        if moved < STEP_TOL * (1.0 + theta.iter().map(|t| t.abs()).fold(0.0, f64::max)) {
            let eval = evaluate(&lives, family, &theta).expect("accepted iterate is feasible");
            let covariance = eval
                .information
                .clone()
                .try_inverse()
                .ok_or_else(|| BranchingError::Domain("observed information is singular".into()))?;
            return Ok(MleFit {
                theta,
                covariance: rows(&covariance),
                log_likelihood: eval.log_likelihood,
                iterations: iteration + 1,
                sample_size: lives.len(),
            });
        }
    }
    Err(BranchingError::NoConvergence { trace })
}
