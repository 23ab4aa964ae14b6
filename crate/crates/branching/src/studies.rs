//! Replicate studies of the estimators: convergence rates and confidence-interval coverage.

use popscale_core::stats::{loglog_slope, median};
use popscale_core::RngStream;
use rayon::prelude::*;

use crate::error::Result;
use crate::estimators::{estimate_nu, KernelEstimatorConfig};
use crate::mle::mle_birth_rate;
use crate::scenarios;
use crate::simulate::{simulate_markov_tree, simulate_tree};
use crate::tree::KeepRule;

/// Root-mean-square error of `ν̂(y0)` per tree size, with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudy {
    pub sizes: Vec<usize>,
    pub rmse: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
}

/// Pointwise RMSE of the invariant-density estimate at `y0` on [`scenarios::copula_triangular`]
/// trees of `2^(g+1) − 1` nodes for each `g` in `generations`.
pub fn nu_rate_study(generations: &[u32], y0: f64, replicates: usize, seed: u64) -> Result<RateStudy> {
    let cfg = KernelEstimatorConfig::default();
    let mut sizes = Vec::new();
    let mut rmse = Vec::new();
    for &g in generations {
        let spec = scenarios::copula_triangular(g);
        let truth = spec.kernel.stationary().pdf(y0);
        let errors: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let tree = simulate_markov_tree(&spec, &mut RngStream::new(seed, ((g as u64) << 32) | r as u64))?;
                let est = estimate_nu(&tree, &cfg, &[y0])?;
                Ok((est.values[0] - truth).powi(2))
            })
            .collect::<Result<_>>()?;
        sizes.push((1usize << (g + 1)) - 1);
        rmse.push((errors.iter().sum::<f64>() / replicates as f64).sqrt());
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let fit = loglog_slope(&xs, &rmse);
    Ok(RateStudy { sizes, rmse, slope: fit.slope, slope_se: fit.slope_se })
}

/// Coverage and width of Wald confidence regions for the affine division rate at one tree size.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageLevel {
    pub generations: u32,
    pub mean_sample_size: f64,
    /// Fraction of replicates whose 95% Wald ellipsoid contains the true parameter.
    pub joint_coverage: f64,
    /// Per-coordinate coverage of the 95% intervals `ϑ̂ ± 1.96·se`.
    pub coordinate_coverage: Vec<f64>,
    /// Mean interval width per coordinate.
    pub mean_width: Vec<f64>,
    pub median_error: f64,
    /// `(ϑ̂ − ϑ⋆)·√n` per replicate.
    pub scaled_errors: Vec<Vec<f64>>,
    /// Mean of `n·Cov(ϑ̂)` over replicates.
    pub mean_scaled_covariance: Vec<Vec<f64>>,
}

/// 95% quantile of `χ²₂`.
pub const CHI2_2_95: f64 = 5.991_464_547_107_979;

/// Fits the affine family on `replicates` [`scenarios::size_growth`] trees of each depth.
pub fn mle_coverage_study(generations: &[u32], replicates: usize, seed: u64) -> Result<Vec<CoverageLevel>> {
    let family = scenarios::affine_family();
    let truth = scenarios::SIZE_GROWTH_THETA;
    generations
        .iter()
        .map(|&g| {
            let spec = scenarios::size_growth(g, KeepRule::Full);
            let fits = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let tree = simulate_tree(&spec, &mut RngStream::new(seed, ((g as u64) << 32) | r as u64))?;
                    mle_birth_rate(&tree, &family)
                })
                .collect::<Result<Vec<_>>>()?;
            let reps = replicates as f64;
            let d = truth.len();
            let joint = fits.iter().filter(|f| f.wald_statistic(&truth) <= CHI2_2_95).count() as f64 / reps;
            let mut coordinate_coverage = vec![0.0; d];
            let mut mean_width = vec![0.0; d];
            let mut mean_scaled_covariance = vec![vec![0.0; d]; d];
            for f in &fits {
                let se = f.standard_errors();
                let n = f.sample_size as f64;
                for j in 0..d {
                    if (f.theta[j] - truth[j]).abs() <= 1.96 * se[j] {
                        coordinate_coverage[j] += 1.0 / reps;
                    }
                    mean_width[j] += 2.0 * 1.96 * se[j] / reps;
                    for (acc, c) in mean_scaled_covariance[j].iter_mut().zip(&f.covariance[j]) {
                        *acc += n * c / reps;
                    }
                }
            }
            let errors: Vec<f64> = fits
                .iter()
                .map(|f| f.theta.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect();
            Ok(CoverageLevel {
                generations: g,
                mean_sample_size: fits.iter().map(|f| f.sample_size as f64).sum::<f64>() / reps,
                joint_coverage: joint,
                coordinate_coverage,
                mean_width,
                median_error: median(&errors),
                scaled_errors: fits
                    .iter()
                    .map(|f| {
                        let root = (f.sample_size as f64).sqrt();
                        f.theta.iter().zip(&truth).map(|(a, b)| (a - b) * root).collect()
                    })
                    .collect(),
                mean_scaled_covariance,
            })
        })
        .collect()
}
