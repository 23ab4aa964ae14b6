use serde::{Deserialize, Serialize};

use crate::{compute_qsd, exit_split_mc, ExitSplit, GroupSelError, PenalizedWfModel, Penalty, QsdResult, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PolymorphicPersists,
    /// Pure cooperator groups (x = 1) take over.
    FixationC,
    /// Pure defector groups (x = 0) take over.
    FixationD,
    Degenerate,
}

/// Weights of `y0 delta_0 + y1 delta_1 + y_alpha alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub y0: f64,
    pub y1: f64,
    pub y_alpha: f64,
}

impl MixtureWeights {
    /// From the exit rates `rho_alpha * P(tau_i first)` through each end.
    fn from_exit_rates(flux0: f64, flux1: f64, rho_alpha: f64, rho0: f64, rho1: f64) -> Self {
        let a0 = flux0 / (rho0 - rho_alpha);
        let a1 = flux1 / (rho1 - rho_alpha);
        let y_alpha = 1.0 / (1.0 + a0 + a1);
        Self { y0: a0 * y_alpha, y1: a1 * y_alpha, y_alpha }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub rho_alpha: f64,
    pub rho0: f64,
    pub rho1: f64,
    /// Rates closer than this are treated as equal.
    pub tolerance: f64,
    /// Mixture weights with the exit split taken from the grid fluxes.
    pub weights: Option<MixtureWeights>,
    /// Mixture weights with the exit split estimated by Monte Carlo.
    pub mc_weights: Option<MixtureWeights>,
    pub exit_split: Option<ExitSplit>,
}

/// Monte Carlo settings for the exit split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSplitConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ExitSplitConfig {
    fn default() -> Self {
        Self { paths: 10_000, dt: 1e-3, seed: 0 }
    }
}

/// Tolerance for comparing extinction rates: ten times the change of
/// `rho_alpha` between `grid_size / 2` and `grid_size` cells.
pub fn rate_tolerance(model: &PenalizedWfModel, fine: &QsdResult, grid_size: usize) -> Result<f64> {
    let coarse = compute_qsd(model, grid_size / 2)?;
    Ok((10.0 * (fine.rho_alpha - coarse.rho_alpha).abs()).max(1e-9))
}

/// Compares `rho_alpha` with the death rates of the pure states.
pub fn classify_regime(
    model: &PenalizedWfModel,
    grid_size: usize,
    exit: Option<ExitSplitConfig>,
) -> Result<RegimeReport> {
    let qsd = compute_qsd(model, grid_size)?;
    let tol = rate_tolerance(model, &qsd, grid_size)?;
    let (ra, r0, r1) = (qsd.rho_alpha, qsd.rho0, qsd.rho1);
    let rho = r0.min(r1);
    let regime = if (ra - rho).abs() <= tol {
        Regime::Degenerate
    } else if ra < rho {
        Regime::PolymorphicPersists
    } else if (r0 - r1).abs() <= tol {
        Regime::Degenerate
    } else if r1 < r0 {
        Regime::FixationC
    } else {
        Regime::FixationD
    };
    let mut report = RegimeReport {
        regime,
        rho_alpha: ra,
        rho0: r0,
        rho1: r1,
        tolerance: tol,
        weights: None,
        mc_weights: None,
        exit_split: None,
    };
    if regime == Regime::PolymorphicPersists {
        report.weights = Some(MixtureWeights::from_exit_rates(qsd.exit_flux0, qsd.exit_flux1, ra, r0, r1));
        if let Some(cfg) = exit {
            let split = exit_split_mc(model, &qsd, cfg.paths, cfg.dt, cfg.seed)?;
            report.mc_weights = Some(MixtureWeights::from_exit_rates(ra * split.p0, ra * split.p1, ra, r0, r1));
            report.exit_split = Some(split);
        }
    }
    Ok(report)
}

/// `rho_alpha - min(rho0, rho1)`: negative when polymorphism persists.
pub fn persistence_margin(model: &PenalizedWfModel, grid_size: usize) -> Result<f64> {
    let q = compute_qsd(model, grid_size)?;
    Ok(q.rho_alpha - q.rho0.min(q.rho1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub scales: Vec<f64>,
    pub margins: Vec<f64>,
    /// Largest scale known to sit on the fixation side.
    pub r_wedge: Option<f64>,
    /// Smallest scale known to sit on the polymorphic side.
    pub r_vee: Option<f64>,
    pub bisection_steps: usize,
}

/// Scans `r = R r0` over `scales` (at least 8 points, increasing) and bisects
/// the first sign change of the persistence margin until the bracket is
/// below `rel_tol` of the scanned range.
pub fn scan_threshold(
    model: &PenalizedWfModel,
    base: &Penalty,
    scales: &[f64],
    grid_size: usize,
    rel_tol: f64,
) -> Result<ThresholdScan> {
    if scales.len() < 8 {
        return Err(GroupSelError::param("scales", "scan needs at least 8 points"));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GroupSelError::param("scales", "must be strictly increasing"));
    }
    let margin = |scale: f64| persistence_margin(&model.with_penalty(base.scaled(scale)), grid_size);
    let margins = scales.iter().map(|&r| margin(r)).collect::<Result<Vec<_>>>()?;
    let mut out = ThresholdScan {
        scales: scales.to_vec(),
        margins: margins.clone(),
        r_wedge: None,
        r_vee: None,
        bisection_steps: 0,
    };
    let Some(k) = (0..scales.len() - 1).find(|&k| (margins[k] > 0.0) != (margins[k + 1] > 0.0)) else {
        // one-sided: report the extreme scale on the observed side
        if margins.iter().all(|&m| m > 0.0) {
            out.r_wedge = scales.last().copied();
        } else {
            out.r_vee = scales.first().copied();
        }
        return Ok(out);
    };
    let range = scales[scales.len() - 1] - scales[0];
    let (mut lo, mut hi) = (scales[k], scales[k + 1]);
    let lo_fixation = margins[k] > 0.0;
    while hi - lo > rel_tol * range && out.bisection_steps < 60 {
        let mid = 0.5 * (lo + hi);
        if (margin(mid)? > 0.0) == lo_fixation {
            lo = mid;
        } else {
            hi = mid;
        }
        out.bisection_steps += 1;
    }
    if lo_fixation {
        out.r_wedge = Some(lo);
        out.r_vee = Some(hi);
    } else {
        out.r_vee = Some(lo);
        out.r_wedge = Some(hi);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaScan {
    pub sigmas: Vec<f64>,
    pub rho_alpha: Vec<f64>,
    pub rho_min: f64,
    pub increasing: bool,
    /// First noise level at which `rho_alpha` exceeds `min(rho0, rho1)`.
    pub exceeds_at: Option<f64>,
}

/// `rho_alpha` along increasing noise levels.
pub fn scan_sigma(model: &PenalizedWfModel, sigmas: &[f64], grid_size: usize) -> Result<SigmaScan> {
    let qs = sigmas.iter().map(|&s| compute_qsd(&model.with_sigma(s), grid_size)).collect::<Result<Vec<_>>>()?;
    let rho_alpha: Vec<f64> = qs.iter().map(|q| q.rho_alpha).collect();
    let rho_min = qs.first().map(|q| q.rho0.min(q.rho1)).unwrap_or(f64::NAN);
    Ok(SigmaScan {
        sigmas: sigmas.to_vec(),
        increasing: rho_alpha.windows(2).all(|w| w[1] > w[0]),
        exceeds_at: sigmas.iter().zip(&rho_alpha).find(|(_, &r)| r > rho_min).map(|(&s, _)| s),
        rho_alpha,
        rho_min,
    })
}
