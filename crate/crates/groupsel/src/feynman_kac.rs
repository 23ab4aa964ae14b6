use popscale_core::{sde_step, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{GridMeasure, GroupSelError, PenalizedWfModel, QsdResult, Result};

/// Effective sample sizes below this raise the `low_ess` flag.
pub const MIN_ESS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkEstimate {
    pub value: f64,
    pub std_error: f64,
    pub effective_sample_size: f64,
    pub low_ess: bool,
}

/// Runs one Wright–Fisher path from `x0` over `[0, t]` and returns the end
/// point and `ln Z_t`, the trapezoidal integral of `r` along the path.
fn weighted_path(model: &PenalizedWfModel, x0: f64, t: f64, dt: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
    let spec = model.diffusion();
    let steps = (t / dt).ceil().max(1.0) as usize;
    let step = t / steps as f64;
    let mut x = x0;
    let mut log_z = 0.0;
    let mut r_prev = model.r(x);
    for _ in 0..steps {
        x = sde_step(x, &spec, step, rng)?;
        let r_now = model.r(x);
        log_z += 0.5 * (r_prev + r_now) * step;
        r_prev = r_now;
    }
    Ok((x, log_z))
}

/// Monte Carlo estimate of `<mu_t | f> = E[f(X_t) Z_t] / E[Z_t]`.
pub fn feynman_kac_estimate(
    mu0: &GridMeasure,
    model: &PenalizedWfModel,
    t: f64,
    f: impl Fn(f64) -> f64 + Sync,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<FkEstimate> {
    if n_paths < 100 {
        return Err(GroupSelError::param("n_paths", format!("need at least 100, got {n_paths}")));
    }
    if !(dt > 0.0) {
        return Err(GroupSelError::param("dt", format!("must be positive, got {dt}")));
    }
    mu0.validate()?;
    model.validate()?;
    let samples: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p);
            let x0 = mu0.sample(&mut rng);
            let (x, log_z) = weighted_path(model, x0, t, dt, &mut rng)?;
            Ok((f(x), log_z))
        })
        .collect::<Result<_>>()?;
    // weights relative to the largest for stability
    let max_log = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = samples.iter().map(|s| (s.1 - max_log).exp()).collect();
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    let value = samples.iter().zip(&weights).map(|(s, w)| s.0 * w).sum::<f64>() / sw;
    let var = samples.iter().zip(&weights).map(|(s, w)| w * w * (s.0 - value).powi(2)).sum::<f64>() / (sw * sw);
    let ess = sw * sw / sw2;
    Ok(FkEstimate { value, std_error: var.sqrt(), effective_sample_size: ess, low_ess: ess < MIN_ESS })
}

/// Fraction of paths absorbed at 0 and at 1 by time `t`.
pub fn absorption_probabilities(
    mu0: &GridMeasure,
    model: &PenalizedWfModel,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let spec = model.diffusion();
    let ends: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p);
            let mut x = mu0.sample(&mut rng);
            let steps = (t / dt).ceil() as usize;
            for _ in 0..steps {
                x = sde_step(x, &spec, dt, &mut rng)?;
                if spec.is_absorbed(x) {
                    break;
                }
            }
            Ok(x)
        })
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    Ok((ends.iter().filter(|&&x| x == 0.0).count() as f64 / n, ends.iter().filter(|&&x| x == 1.0).count() as f64 / n))
}

/// Starting from `1e-4 * t`, halves the Euler step until the absorption
/// probabilities by time `t` move by less than 1% (relative), and returns
/// the last step.
pub fn calibrate_wf_dt(
    mu0: &GridMeasure,
    model: &PenalizedWfModel,
    t: f64,
    n_paths: usize,
    seed: u64,
    max_halvings: usize,
) -> Result<f64> {
    let mut dt = 1e-4 * t;
    let mut prev = absorption_probabilities(mu0, model, t, dt, n_paths, seed)?;
    for _ in 0..max_halvings {
        let next_dt = 0.5 * dt;
        let next = absorption_probabilities(mu0, model, t, next_dt, n_paths, seed)?;
        let rel = |a: f64, b: f64| if a.max(b) > 0.0 { (a - b).abs() / a.max(b) } else { 0.0 };
        dt = next_dt;
        if rel(prev.0, next.0) < 0.01 && rel(prev.1, next.1) < 0.01 {
            return Ok(dt);
        }
        prev = next;
    }
    Ok(dt)
}

/// Monte Carlo exit split from the quasi-stationary law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSplit {
    /// Probability of reaching 0 first.
    pub p0: f64,
    /// Probability of reaching 1 first.
    pub p1: f64,
    pub p_killed: f64,
    /// Binomial standard errors of `p0` and `p1`.
    pub se0: f64,
    pub se1: f64,
}

/// Estimates `P_alpha(tau_0 first)` and `P_alpha(tau_1 first)` by running
/// paths from the QSD with killing at rate `-r` (shifted).
pub fn exit_split_mc(
    model: &PenalizedWfModel,
    qsd: &QsdResult,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<ExitSplit> {
    let shifted = model.shifted_nonpositive();
    let spec = shifted.diffusion();
    // generous cap: the mean exit time is 1 / rho_alpha
    let t_max = 200.0 / qsd.rho_alpha.max(1e-3);
    let outcomes: Vec<u8> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p);
            let mut x = qsd.alpha.sample(&mut rng);
            let budget = rng.exponential(1.0);
            let mut hazard = 0.0;
            let mut t = 0.0;
            while t < t_max {
                let k0 = -shifted.r(x);
                x = sde_step(x, &spec, dt, &mut rng)?;
                t += dt;
                if x == 0.0 {
                    return Ok(0);
                }
                if x == 1.0 {
                    return Ok(1);
                }
                hazard += 0.5 * (k0 - shifted.r(x)) * dt;
                if hazard >= budget {
                    return Ok(2);
                }
            }
            Err(GroupSelError::NoConvergence(format!("exit path {p} survived past {t_max}")))
        })
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    let p0 = outcomes.iter().filter(|&&o| o == 0).count() as f64 / n;
    let p1 = outcomes.iter().filter(|&&o| o == 1).count() as f64 / n;
    Ok(ExitSplit {
        p0,
        p1,
        p_killed: 1.0 - p0 - p1,
        se0: (p0 * (1.0 - p0) / n).sqrt(),
        se1: (p1 * (1.0 - p1) / n).sqrt(),
    })
}
