use crate::{KernelError, Result, RngStream};

/// Event times on `[0, horizon]` of a Poisson process with intensity
/// `rate_fn`, by thinning a homogeneous process at `rate_bound`.
pub fn inhomogeneous_poisson(
    rate_fn: impl FnMut(f64) -> f64,
    horizon: f64,
    rate_bound: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut times = Vec::new();
    thinning(rate_fn, horizon, rate_bound, rng, |t| {
        times.push(t);
        true
    })?;
    Ok(times)
}

/// First event time of the thinned process, if one occurs before `horizon`.
pub fn first_event(
    rate_fn: impl FnMut(f64) -> f64,
    horizon: f64,
    rate_bound: f64,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    let mut first = None;
    thinning(rate_fn, horizon, rate_bound, rng, |t| {
        first = Some(t);
        false
    })?;
    Ok(first)
}

fn thinning(
    mut rate_fn: impl FnMut(f64) -> f64,
    horizon: f64,
    rate_bound: f64,
    rng: &mut RngStream,
    mut accept: impl FnMut(f64) -> bool,
) -> Result<()> {
    if !(horizon >= 0.0) {
        return Err(KernelError::param("horizon", format!("must be nonnegative, got {horizon}")));
    }
    if !(rate_bound >= 0.0) || !rate_bound.is_finite() {
        return Err(KernelError::param("rate_bound", format!("must be finite and nonnegative, got {rate_bound}")));
    }
    if rate_bound == 0.0 {
        return Ok(());
    }
    let mut t = 0.0;
    loop {
        t += rng.exponential(rate_bound);
        if t > horizon {
            return Ok(());
        }
        let rate = rate_fn(t);
        if rate > rate_bound || rate < 0.0 || !rate.is_finite() {
            return Err(KernelError::RateBoundViolated { time: t, rate, bound: rate_bound });
        }
        if rng.uniform() * rate_bound < rate && !accept(t) {
            return Ok(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_count(rate: impl Fn(f64) -> f64 + Copy, horizon: f64, bound: f64) -> f64 {
        let reps = 10_000;
        let total: usize = (0..reps)
            .map(|r| {
                let mut rng = RngStream::new(99, r);
                inhomogeneous_poisson(rate, horizon, bound, &mut rng).unwrap().len()
            })
            .sum();
        total as f64 / reps as f64
    }

    #[test]
    fn zero_rate_gives_no_events() {
        let mut rng = RngStream::new(1, 0);
        assert!(inhomogeneous_poisson(|_| 0.0, 10.0, 0.0, &mut rng).unwrap().is_empty());
        assert!(inhomogeneous_poisson(|_| 0.0, 10.0, 3.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn homogeneous_mean_count() {
        let m = mean_count(|_| 2.0, 10.0, 2.0);
        assert!((m - 20.0).abs() < 0.5, "mean = {m}");
    }

    #[test]
    fn linear_intensity_mean_count() {
        let m = mean_count(|t| t, 1.0, 1.0);
        assert!((m - 0.5).abs() < 0.02, "mean = {m}");
    }

    #[test]
    fn bound_violation_is_an_error() {
        let mut rng = RngStream::new(1, 0);
        let err = inhomogeneous_poisson(|t| 5.0 * t, 10.0, 1.0, &mut rng).unwrap_err();
        assert!(matches!(err, KernelError::RateBoundViolated { .. }));
    }

    #[test]
    fn times_sorted_within_horizon() {
        let mut rng = RngStream::new(4, 4);
        let ts = inhomogeneous_poisson(|t| 1.0 + t.sin().abs(), 50.0, 2.0, &mut rng).unwrap();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(ts.iter().all(|&t| (0.0..=50.0).contains(&t)));
    }
}
