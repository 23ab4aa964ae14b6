//! Conservative finite-volume discretization of the Wright–Fisher
//! Fokker–Planck equation.
//!
//! Interior faces use the exponentially fitted (Scharfetter–Gummel) flux so
//! the scheme stays positive for degenerate diffusion; the two boundary
//! faces carry pure outflow into the atoms at 0 and 1.

use crate::PenalizedWfModel;

/// Tridiagonal generator acting on cell densities, plus the outflow
/// coefficients feeding the atoms.
#[derive(Clone, Debug)]
pub struct FvOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    /// Mass rate into the atom at 0 per unit density in the first cell.
    pub outflow0: f64,
    /// Mass rate into the atom at 1 per unit density in the last cell.
    pub outflow1: f64,
}

fn bernoulli_fn(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

impl FvOperator {
    /// Transport part only (no reweighting by `r`).
    pub fn transport(model: &PenalizedWfModel, cells: usize) -> Self {
        let h = 1.0 / cells as f64;
        let s = model.selection;
        let var = model.sigma * model.sigma;
        let mut lower = vec![0.0; cells.saturating_sub(1)];
        let mut upper = vec![0.0; cells.saturating_sub(1)];
        let mut diag = vec![0.0; cells];
        for f in 0..cells.saturating_sub(1) {
            let x = (f + 1) as f64 * h;
            let diff = 0.5 * var * x * (1.0 - x);
            let vel = -s * x * (1.0 - x) - 0.5 * var * (1.0 - 2.0 * x);
            // flux J = left_coef * p_f - right_coef * p_{f+1}
            let (left_coef, right_coef) = if diff > 0.0 {
                let z = vel * h / diff;
                (diff / h * bernoulli_fn(-z), diff / h * bernoulli_fn(z))
            } else {
                (vel.max(0.0), (-vel).max(0.0))
            };
            diag[f] -= left_coef / h;
            upper[f] += right_coef / h;
            lower[f] += left_coef / h;
            diag[f + 1] -= right_coef / h;
        }
        let outflow = 0.5 * var;
        diag[0] -= outflow / h;
        diag[cells - 1] -= outflow / h;
        Self { lower, diag, upper, outflow0: outflow, outflow1: outflow }
    }

    /// Transport plus `diag(r)` with `r` read at the cell centers.
    pub fn with_growth(model: &PenalizedWfModel, cells: usize) -> Self {
        let mut op = Self::transport(model, cells);
        let h = 1.0 / cells as f64;
        for (i, d) in op.diag.iter_mut().enumerate() {
            *d += model.r((i as f64 + 0.5) * h);
        }
        op
    }

    pub fn cells(&self) -> usize {
        self.diag.len()
    }

    /// `y = A p`.
    pub fn apply(&self, p: &[f64], y: &mut [f64]) {
        let n = self.cells();
        for i in 0..n {
            let mut v = self.diag[i] * p[i];
            if i > 0 {
                v += self.lower[i - 1] * p[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * p[i + 1];
            }
            y[i] = v;
        }
    }

    /// `y = A^T q`.
    pub fn apply_transpose(&self, q: &[f64], y: &mut [f64]) {
        let n = self.cells();
        for i in 0..n {
            let mut v = self.diag[i] * q[i];
            if i > 0 {
                v += self.upper[i - 1] * q[i - 1];
            }
            if i + 1 < n {
                v += self.lower[i] * q[i + 1];
            }
            y[i] = v;
        }
    }

    /// Solves `(I - dt A) x = rhs` (implicit Euler step). `I - dt A` is
    /// diagonally dominant by columns with nonpositive off-diagonals, so
    /// elimination without pivoting is stable.
    pub fn solve_implicit(&self, dt: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.cells();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = 1.0 - dt * self.diag[0];
        x[0] = rhs[0] / denom;
        for i in 1..n {
            c[i - 1] = -dt * self.upper[i - 1] / denom;
            denom = 1.0 - dt * self.diag[i] - (-dt * self.lower[i - 1]) * c[i - 1];
            x[i] = (rhs[i] + dt * self.lower[i - 1] * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }

    /// Largest explicit Euler step that keeps every update nonnegative.
    pub fn max_explicit_dt(&self) -> f64 {
        1.0 / self.diag.iter().fold(0.0f64, |m, d| m.max(-d))
    }
}
