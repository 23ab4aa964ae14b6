//! Empirical means along a genealogy and kernel estimators of the invariant density `ν`
//! and the transition density `q`.

use serde::{Deserialize, Serialize};

use crate::error::{BranchingError, Result};
use crate::tree::LineageTree;

/// Minimum sample size for the density estimators.
pub const MIN_SAMPLES: usize = 100;

/// `|U_n^⋆|^{-1} Σ ψ(X_{u−}, X_u)` over the non-root nodes.
pub fn tree_mean(tree: &LineageTree, psi: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let pairs = tree.transitions();
    if pairs.is_empty() {
        return Err(BranchingError::Domain("tree has no non-root node".into()));
    }
    Ok(pairs.iter().map(|&(p, c)| psi(p, c)).sum::<f64>() / pairs.len() as f64)
}

/// Compactly supported polynomial kernel on `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothingKernel {
    /// `(3/4)(1 − u²)`, order 2.
    Epanechnikov,
    /// `(15/32)(3 − 10u² + 7u⁴)`, order 4; takes negative values.
    QuarticOrder4,
}

impl SmoothingKernel {
    pub fn of_order(order: u32) -> Result<Self> {
        match order {
            1 | 2 => Ok(Self::Epanechnikov),
            3 | 4 => Ok(Self::QuarticOrder4),
            _ => Err(BranchingError::param("kernel_order", "supported orders are 1 to 4")),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        let u2 = u * u;
        match self {
            Self::Epanechnikov => 0.75 * (1.0 - u2),
            Self::QuarticOrder4 => 15.0 / 32.0 * (3.0 - 10.0 * u2 + 7.0 * u2 * u2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimatorConfig {
    /// Bandwidth of `ν̂`; default `|U_n|^{−1/(2β+1)}`.
    pub bandwidth_nu: Option<f64>,
    /// Bandwidths of `q̂` in the parent and child directions.
    pub bandwidth_q: Option<(f64, f64)>,
    /// Floor `ϖ_n` of the denominator of `q̂`; default `1/log|U_n|`.
    pub threshold: Option<f64>,
    pub kernel_order: u32,
    /// Hölder orders `(α, β)` of `q` in the parent and child variables.
    pub holder: (f64, f64),
}

impl Default for KernelEstimatorConfig {
    fn default() -> Self {
        Self { bandwidth_nu: None, bandwidth_q: None, threshold: None, kernel_order: 2, holder: (1.0, 1.0) }
    }
}

/// Configuration with every default filled in for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedConfig {
    pub kernel: SmoothingKernel,
    pub bandwidth_nu: f64,
    pub bandwidth_q: (f64, f64),
    pub threshold: f64,
}

impl KernelEstimatorConfig {
    /// Effective anisotropic smoothness `s` with `1/s = 1/(α∧β) + 1/β`.
    pub fn effective_smoothness(&self) -> f64 {
        let (alpha, beta) = self.holder;
        1.0 / (1.0 / alpha.min(beta) + 1.0 / beta)
    }

    pub fn resolve(&self, n: usize) -> Result<ResolvedConfig> {
        let (alpha, beta) = self.holder;
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(BranchingError::param("holder", "orders must be positive"));
        }
        let n = n.max(2) as f64;
        let s = self.effective_smoothness();
        let bandwidth_nu = self.bandwidth_nu.unwrap_or_else(|| n.powf(-1.0 / (2.0 * beta + 1.0)));
        let bandwidth_q = self.bandwidth_q.unwrap_or_else(|| {
            let rate = s / (2.0 * s + 1.0);
            (n.powf(-rate / alpha.min(beta)), n.powf(-rate / beta))
        });
        let threshold = self.threshold.unwrap_or_else(|| 1.0 / n.ln());
        if !(bandwidth_nu > 0.0 && bandwidth_q.0 > 0.0 && bandwidth_q.1 > 0.0) {
            return Err(BranchingError::param("bandwidth", "must be positive"));
        }
        if !(threshold > 0.0) {
            return Err(BranchingError::param("threshold", "must be positive"));
        }
        Ok(ResolvedConfig {
            kernel: SmoothingKernel::of_order(self.kernel_order)?,
            bandwidth_nu,
            bandwidth_q,
            threshold,
        })
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2).zip(values.windows(2)).map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1])).sum()
}

/// Kernel estimate on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Values rescaled to unit trapezoid mass on the grid.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.mass();
        if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            self.values.clone()
        }
    }

    /// Grid point of largest estimated density.
    pub fn mode(&self) -> f64 {
        let best = self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
        self.grid[best]
    }
}

/// `(1/(n h)) Σ K((y − x_i)/h)` over sorted data, visiting only points within `h`.
fn kernel_sum(sorted: &[f64], y: f64, h: f64, kernel: SmoothingKernel) -> f64 {
    let start = sorted.partition_point(|&x| x < y - h);
    let end = sorted.partition_point(|&x| x <= y + h);
    sorted[start..end].iter().map(|&x| kernel.eval((y - x) / h)).sum::<f64>() / (sorted.len() as f64 * h)
}

/// Kernel estimate of the invariant density from the traits at birth of all kept nodes.
/// Negative values of higher-order kernels are clipped to 0.
pub fn estimate_nu(tree: &LineageTree, cfg: &KernelEstimatorConfig, grid: &[f64]) -> Result<DensityEstimate> {
    let mut data = tree.traits();
    if data.len() < MIN_SAMPLES {
        return Err(BranchingError::Domain(format!("need at least {MIN_SAMPLES} nodes, got {}", data.len())));
    }
    let rc = cfg.resolve(data.len())?;
    data.sort_by(f64::total_cmp);
    let values = grid.iter().map(|&y| kernel_sum(&data, y, rc.bandwidth_nu, rc.kernel).max(0.0)).collect();
    Ok(DensityEstimate { grid: grid.to_vec(), values, bandwidth: rc.bandwidth_nu })
}

/// Quotient estimate `q̂(x, y)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// `values[i][j] = q̂(grid_x[i], grid_y[j])`.
    pub values: Vec<Vec<f64>>,
    /// Estimated parent density at each `grid_x` point.
    pub parent_density: Vec<f64>,
    pub bandwidths: (f64, f64),
    pub threshold: f64,
}

impl TransitionEstimate {
    pub fn row_mass(&self, i: usize) -> f64 {
        trapezoid(&self.grid_y, &self.values[i])
    }
}

/// Joint kernel estimate of `(X_{u−}, X_u)` divided by `max(ν̂(x), ϖ_n)`, where `ν̂` is the
/// kernel estimate of the parent traits with the same parent bandwidth.
pub fn estimate_q(
    tree: &LineageTree,
    cfg: &KernelEstimatorConfig,
    grid_x: &[f64],
    grid_y: &[f64],
) -> Result<TransitionEstimate> {
    let mut pairs = tree.transitions();
    if pairs.len() < MIN_SAMPLES {
        return Err(BranchingError::Domain(format!("need at least {MIN_SAMPLES} transitions, got {}", pairs.len())));
    }
    let rc = cfg.resolve(pairs.len())?;
    let (hx, hy) = rc.bandwidth_q;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let parents: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n = pairs.len() as f64;
    let mut values = Vec::with_capacity(grid_x.len());
    let mut parent_density = Vec::with_capacity(grid_x.len());
    for &x in grid_x {
        let start = parents.partition_point(|&p| p < x - hx);
        let end = parents.partition_point(|&p| p <= x + hx);
        let window = &pairs[start..end];
        let weights: Vec<f64> = window.iter().map(|(p, _)| rc.kernel.eval((x - p) / hx) / hx).collect();
        let nu = weights.iter().sum::<f64>() / n;
        let denom = nu.max(rc.threshold);
        let row = grid_y
            .iter()
            .map(|&y| {
                let joint: f64 =
                    window.iter().zip(&weights).map(|((_, c), w)| w * rc.kernel.eval((y - c) / hy) / hy).sum::<f64>()
                        / n;
                (joint / denom).max(0.0)
            })
            .collect();
        values.push(row);
        parent_density.push(nu);
    }
    Ok(TransitionEstimate {
        grid_x: grid_x.to_vec(),
        grid_y: grid_y.to_vec(),
        values,
        parent_density,
        bandwidths: (hx, hy),
        threshold: rc.threshold,
    })
}
