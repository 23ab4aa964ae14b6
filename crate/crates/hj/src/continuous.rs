//! The ε-system on a continuous trait space in one or two dimensions:
//! `∂u/∂t = (ε/2)Δu + u·R(x, ψ)/ε`, `ψ^i = ∫ Ψ^i(x) u(x) dx`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridBoundary {
    Periodic,
    /// Zero flux through the box faces.
    Neumann,
}

/// `R(x, ψ) = peak − curvature·|x − optimum|² − Σ_i slopes[i]·ψ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFitness {
    pub peak: f64,
    pub curvature: f64,
    pub optimum: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl QuadraticFitness {
    pub fn rate(&self, x: &[f64], psi: &[f64]) -> f64 {
        let dist2: f64 = x.iter().zip(&self.optimum).map(|(a, b)| (a - b) * (a - b)).sum();
        self.peak - self.curvature * dist2 - self.slopes.iter().zip(psi).map(|(c, p)| c * p).sum::<f64>()
    }
}

/// `Ψ(x) = base + amplitude·exp(−|x − center|²/(2·width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub base: f64,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl GaussianKernel {
    pub fn flat(level: f64, dimension: usize) -> Self {
        Self { base: level, amplitude: 0.0, center: vec![0.0; dimension], width: 1.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dist2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.base + self.amplitude * (-dist2 / (2.0 * self.width * self.width)).exp()
    }

    fn min_value(&self) -> f64 {
        self.base + self.amplitude.min(0.0)
    }
}

/// Initial condition `u(0, x) = exp(−h(x)/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum InitialExponent {
    /// `h(x) = curvature·|x − center|²`.
    Quadratic { center: Vec<f64>, curvature: f64 },
    /// `u(0, x) = 1 + amplitude·cos(2π·modes·(x₁ − lower)/length)`.
    CosineProfile { amplitude: f64, modes: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousHjModel {
    pub dimension: usize,
    pub lower: f64,
    pub upper: f64,
    /// Cells per axis.
    pub cells: usize,
    pub boundary: GridBoundary,
    pub epsilon: f64,
    pub fitness: QuadraticFitness,
    pub kernels: Vec<GaussianKernel>,
    pub initial: InitialExponent,
    /// Confinement box `[v_min, v_max]` for the resource levels.
    pub psi_bounds: (f64, f64),
    /// Time after which the confinement check is enforced.
    pub burn_in: f64,
}

impl ContinuousHjModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dimension == 1 || self.dimension == 2) {
            return Err(HjError::param("dimension", "only 1 and 2 are supported"));
        }
        if !(self.upper > self.lower) || self.cells < 4 {
            return Err(HjError::param("grid", "need upper > lower and at least 4 cells per axis"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HjError::param("epsilon", "must be positive"));
        }
        if self.cell_width() > 0.5 * self.epsilon.sqrt() {
            return Err(HjError::param("cells", "grid must resolve the concentration width sqrt(epsilon)"));
        }
        if self.fitness.optimum.len() != self.dimension {
            return Err(HjError::param("fitness.optimum", "length must match the dimension"));
        }
        if self.fitness.slopes.len() != self.kernels.len() || self.kernels.is_empty() {
            return Err(HjError::param("fitness.slopes", "need one positive slope per resource kernel"));
        }
        if self.fitness.slopes.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(HjError::param("fitness.slopes", "growth must be strictly decreasing in every resource"));
        }
        if !(self.fitness.curvature >= 0.0) {
            return Err(HjError::param("fitness.curvature", "must be non-negative"));
        }
        for k in &self.kernels {
            if k.center.len() != self.dimension || !(k.width > 0.0) || !(k.min_value() > 0.0) {
                return Err(HjError::param("kernels", "kernels must be bounded below by a positive constant"));
            }
        }
        let (lo, hi) = self.psi_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(HjError::param("psi_bounds", "need 0 < v_min <= v_max"));
        }
        if let InitialExponent::Quadratic { center, curvature } = &self.initial {
            if center.len() != self.dimension || !(*curvature >= 0.0) {
                return Err(HjError::param("initial", "quadratic exponent needs a centre and curvature >= 0"));
            }
        }
        Ok(())
    }

    pub fn cell_width(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..self.cells).map(|c| self.lower + (c as f64 + 0.5) * h).collect()
    }

    pub fn points(&self) -> usize {
        self.cells.pow(self.dimension as u32)
    }

    /// Coordinates of flattened grid point `p` (row-major, last axis fastest).
    pub fn point(&self, p: usize) -> Vec<f64> {
        let h = self.cell_width();
        let coord = |c: usize| self.lower + (c as f64 + 0.5) * h;
        match self.dimension {
            1 => vec![coord(p)],
            _ => vec![coord(p / self.cells), coord(p % self.cells)],
        }
    }

    fn initial_u(&self) -> Vec<f64> {
        (0..self.points())
            .map(|p| {
                let x = self.point(p);
                match &self.initial {
                    InitialExponent::Quadratic { center, curvature } => {
                        let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-curvature * d2 / self.epsilon).exp()
                    }
                    InitialExponent::CosineProfile { amplitude, modes } => {
                        let len = self.upper - self.lower;
                        1.0 + amplitude * (2.0 * PI * *modes as f64 * (x[0] - self.lower) / len).cos()
                    }
                }
            })
            .collect()
    }

    fn resource_levels(&self, u: &[f64], kernel_values: &[Vec<f64>]) -> Vec<f64> {
        let vol = self.cell_width().powi(self.dimension as i32);
        kernel_values.iter().map(|k| vol * k.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()).collect()
    }
}

/// Sampled solution on the trait grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSolution {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
}

impl ContinuousSolution {
    pub fn phi(&self, n: usize) -> PhiField {
        phi_from_u(&self.u[n], self.epsilon)
    }

    /// Grid point carrying the largest density at sample `n`.
    pub fn dominant_trait(&self, n: usize) -> Vec<f64> {
        let best = self.u[n].iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(p, _)| p);
        self.points[best].clone()
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p]
    }
}

/// `ε·log u` on a grid, raw and shifted to maximum 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiField {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

/// `φ_ε = ε·log u`, with `u` floored at the smallest positive normal float.
pub fn phi_from_u(u: &[f64], epsilon: f64) -> PhiField {
    let raw: Vec<f64> = u.iter().map(|v| epsilon * v.max(f64::MIN_POSITIVE).ln()).collect();
    let top = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let normalized = raw.iter().map(|v| v - top).collect();
    PhiField { raw, normalized }
}

/// Solves the tridiagonal system `(1 + 2c)x_i − c(x_{i−1} + x_{i+1}) = b_i` in place.
fn implicit_diffusion_line(b: &mut [f64], c: f64, boundary: GridBoundary, scratch: &mut Vec<f64>) {
    let n = b.len();
    match boundary {
        GridBoundary::Neumann => {
            let diag = |i: usize| if i == 0 || i == n - 1 { 1.0 + c } else { 1.0 + 2.0 * c };
            thomas(b, -c, diag, scratch);
        }
        GridBoundary::Periodic => {
            // Sherman–Morrison on the cyclic system with corner entries −c.
            let gamma = -(1.0 + 2.0 * c);
            let diag = |i: usize| {
                if i == 0 {
                    1.0 + 2.0 * c - gamma
                } else if i == n - 1 {
                    1.0 + 2.0 * c - c * c / gamma
                } else {
                    1.0 + 2.0 * c
                }
            };
            let mut z = vec![0.0; n];
            z[0] = gamma;
            z[n - 1] = -c;
            thomas(b, -c, diag, scratch);
            thomas(&mut z, -c, diag, scratch);
            let factor = (b[0] + b[n - 1] * -c / gamma) / (1.0 + z[0] + z[n - 1] * -c / gamma);
            for (x, zi) in b.iter_mut().zip(&z) {
                *x -= factor * zi;
            }
        }
    }
}

fn thomas(b: &mut [f64], off: f64, diag: impl Fn(usize) -> f64, scratch: &mut Vec<f64>) {
    let n = b.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag(0);
    scratch[0] = off / denom;
    b[0] /= denom;
    for i in 1..n {
        denom = diag(i) - off * scratch[i - 1];
        scratch[i] = off / denom;
        b[i] = (b[i] - off * b[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        b[i] -= scratch[i] * b[i + 1];
    }
}

/// Integrates the continuous ε-system to `horizon` with step `dt`, storing `samples + 1`
/// uniform snapshots.
///
/// Each step multiplies by `exp(dt·R(x, ψ)/ε)` with `ψ` taken from the current iterate,
/// then applies one implicit Euler step of `(ε/2)Δ` axis by axis. Both stages keep `u ≥ 0`.
pub fn solve_u_eps_continuous(
    model: &ContinuousHjModel,
    horizon: f64,
    dt: f64,
    samples: usize,
) -> Result<ContinuousSolution> {
    model.validate()?;
    if !(horizon > 0.0 && dt > 0.0 && dt <= horizon) || samples == 0 {
        return Err(HjError::param("dt", "need 0 < dt <= horizon and at least one sample"));
    }
    let steps_per_sample = (horizon / samples as f64 / dt).ceil().max(1.0) as usize;
    let dt = horizon / (samples * steps_per_sample) as f64;
    let points: Vec<Vec<f64>> = (0..model.points()).map(|p| model.point(p)).collect();
    let kernel_values: Vec<Vec<f64>> =
        model.kernels.iter().map(|k| points.iter().map(|x| k.eval(x)).collect()).collect();
    let h = model.cell_width();
    let c = 0.5 * model.epsilon * dt / (h * h);
    let (v_min, v_max) = model.psi_bounds;

    let mut u = model.initial_u();
    let mut sol = ContinuousSolution {
        epsilon: model.epsilon,
        times: vec![0.0],
        u: vec![u.clone()],
        psi: vec![model.resource_levels(&u, &kernel_values)],
        points: points.clone(),
    };
    let mut line = Vec::with_capacity(model.cells);
    let mut scratch = Vec::with_capacity(model.cells);
    let mut step = 0usize;
    for _ in 0..samples {
        for _ in 0..steps_per_sample {
            let psi = model.resource_levels(&u, &kernel_values);
            let t = step as f64 * dt;
            if t >= model.burn_in && psi.iter().any(|p| !(*p >= 0.5 * v_min && *p <= 2.0 * v_max)) {
                return Err(HjError::Confinement { time: t, psi, low: 0.5 * v_min, high: 2.0 * v_max });
            }
            for (v, x) in u.iter_mut().zip(&points) {
                *v *= (dt * model.fitness.rate(x, &psi) / model.epsilon).exp();
            }
            let n = model.cells;
            if model.dimension == 1 {
                implicit_diffusion_line(&mut u, c, model.boundary, &mut scratch);
            } else {
                for row in u.chunks_mut(n) {
                    implicit_diffusion_line(row, c, model.boundary, &mut scratch);
                }
                for col in 0..n {
                    line.clear();
                    line.extend((0..n).map(|r| u[r * n + col]));
                    implicit_diffusion_line(&mut line, c, model.boundary, &mut scratch);
                    for (r, v) in line.iter().enumerate() {
                        u[r * n + col] = *v;
                    }
                }
            }
            step += 1;
        }
        sol.times.push(step as f64 * dt);
        sol.psi.push(model.resource_levels(&u, &kernel_values));
        sol.u.push(u.clone());
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_of_constant_one_is_zero() {
        let f = phi_from_u(&[1.0; 5], 0.1);
        assert!(f.raw.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn phi_inverts_exponential() {
        let eps = 0.05;
        let g = [0.0f64, 0.3, 1.7, 4.0];
        let u: Vec<f64> = g.iter().map(|x| (-x / eps).exp()).collect();
        let f = phi_from_u(&u, eps);
        for (a, b) in f.raw.iter().zip(&g) {
            assert!((a + b).abs() < 1e-12);
        }
        assert_eq!(f.normalized, f.raw);
    }

    #[test]
    fn zero_density_is_floored() {
        let f = phi_from_u(&[0.0, 1.0], 1.0);
        assert!(f.raw[0].is_finite());
    }

    #[test]
    fn cyclic_solver_matches_dense_solve() {
        let n = 7;
        let c = 0.8;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let mut x = rhs.clone();
        implicit_diffusion_line(&mut x, c, GridBoundary::Periodic, &mut Vec::new());
        for i in 0..n {
            let left = x[(i + n - 1) % n];
            let right = x[(i + 1) % n];
            let lhs = (1.0 + 2.0 * c) * x[i] - c * (left + right);
            assert!((lhs - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_solver_conserves_sum() {
        let mut x = vec![0.0, 0.0, 5.0, 1.0, 0.0];
        let total: f64 = x.iter().sum();
        implicit_diffusion_line(&mut x, 2.0, GridBoundary::Neumann, &mut Vec::new());
        assert!((x.iter().sum::<f64>() - total).abs() < 1e-12);
        assert!(x.iter().all(|v| *v > 0.0));
    }
}
