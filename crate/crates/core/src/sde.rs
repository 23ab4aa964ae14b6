use std::fmt;
use std::sync::Arc;

use crate::{KernelError, Result, RngStream};

/// Points within this distance of an absorbing endpoint are absorbed.
pub const ABSORPTION_TOL: f64 = 1e-9;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Absorb,
    Reflect,
    None,
}

/// Scalar diffusion `dX = drift(X) dt + noise(X) dW` on a closed interval.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub drift: ScalarFn,
    pub noise: ScalarFn,
    pub domain: (f64, f64),
    pub boundary: Boundary,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("domain", &self.domain)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl DiffusionSpec {
    pub fn new(
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        noise: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
        boundary: Boundary,
    ) -> Result<Self> {
        if !(domain.0 <= domain.1) {
            return Err(KernelError::param("domain", format!("empty interval [{}, {}]", domain.0, domain.1)));
        }
        Ok(Self { drift: Arc::new(drift), noise: Arc::new(noise), domain, boundary })
    }

    /// `dX = -s X(1-X) dt + sigma sqrt(X(1-X)) dW` on [0,1], absorbed at the ends.
    pub fn wright_fisher(selection: f64, sigma: f64) -> Self {
        Self {
            drift: Arc::new(move |x| -selection * x * (1.0 - x)),
            noise: Arc::new(move |x| sigma * (x * (1.0 - x)).max(0.0).sqrt()),
            domain: (0.0, 1.0),
            boundary: Boundary::Absorb,
        }
    }

    /// Whether `x` sits on an absorbing endpoint.
    pub fn is_absorbed(&self, x: f64) -> bool {
        self.boundary == Boundary::Absorb
            && (x <= self.domain.0 + ABSORPTION_TOL || x >= self.domain.1 - ABSORPTION_TOL)
    }
}

/// One Euler–Maruyama step, mapped back onto the domain.
pub fn sde_step(x: f64, spec: &DiffusionSpec, dt: f64, rng: &mut RngStream) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(KernelError::param("dt", format!("must be positive, got {dt}")));
    }
    let (lo, hi) = spec.domain;
    if spec.is_absorbed(x) {
        return Ok(if x <= lo + ABSORPTION_TOL { lo } else { hi });
    }
    let noise = (spec.noise)(x);
    let mut y = x + (spec.drift)(x) * dt;
    if noise != 0.0 {
        y += noise * dt.sqrt() * rng.normal();
    }
    Ok(match spec.boundary {
        Boundary::Absorb => {
            if y <= lo + ABSORPTION_TOL {
                lo
            } else if y >= hi - ABSORPTION_TOL {
                hi
            } else {
                y
            }
        }
        Boundary::Reflect => reflect(y, lo, hi),
        Boundary::None => y.clamp(lo, hi),
    })
}

fn reflect(mut y: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    for _ in 0..4 {
        if y < lo {
            y = 2.0 * lo - y;
        } else if y > hi {
            y = 2.0 * hi - y;
        } else {
            return y;
        }
    }
    y.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorbing_endpoint_is_fixed() {
        let spec = DiffusionSpec::wright_fisher(0.3, 1.0);
        let mut rng = RngStream::new(1, 0);
        for x0 in [0.0, 1.0] {
            let mut x = x0;
            for _ in 0..1000 {
                x = sde_step(x, &spec, 0.01, &mut rng).unwrap();
                assert_eq!(x, x0);
            }
        }
    }

    #[test]
    fn deterministic_euler_step() {
        let spec = DiffusionSpec::wright_fisher(1.0, 0.0);
        let mut rng = RngStream::new(1, 0);
        let y = sde_step(0.5, &spec, 0.01, &mut rng).unwrap();
        assert!((y - 0.4975).abs() < 1e-15);
    }

    #[test]
    fn neutral_wright_fisher_keeps_its_mean() {
        let spec = DiffusionSpec::wright_fisher(0.0, 1.0);
        let paths = 100_000;
        let dt = 1e-3;
        let steps = 500;
        let mut total = 0.0;
        for p in 0..paths {
            let mut rng = RngStream::new(17, p);
            let mut x = 0.5;
            for _ in 0..steps {
                x = sde_step(x, &spec, dt, &mut rng).unwrap();
            }
            total += x;
        }
        let mean = total / paths as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn zero_coefficients_are_identity_inside() {
        let spec = DiffusionSpec::new(|_| 0.0, |_| 0.0, (0.0, 1.0), Boundary::Reflect).unwrap();
        let mut rng = RngStream::new(1, 0);
        for x in [0.1, 0.37, 0.99] {
            assert_eq!(sde_step(x, &spec, 0.1, &mut rng).unwrap(), x);
        }
    }

    #[test]
    fn nonpositive_dt_rejected() {
        let spec = DiffusionSpec::wright_fisher(0.0, 1.0);
        let mut rng = RngStream::new(1, 0);
        assert!(sde_step(0.5, &spec, 0.0, &mut rng).is_err());
        assert!(sde_step(0.5, &spec, -1.0, &mut rng).is_err());
    }

    #[test]
    fn reflection_stays_in_domain() {
        let spec = DiffusionSpec::new(|_| 0.0, |_| 3.0, (0.0, 1.0), Boundary::Reflect).unwrap();
        let mut rng = RngStream::new(8, 0);
        let mut x = 0.5;
        for _ in 0..10_000 {
            x = sde_step(x, &spec, 0.01, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }
}
