use popscale_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::{GroupSelError, Result};

/// Mass tolerance of a probability [`GridMeasure`].
pub const MASS_TOL: f64 = 1e-8;

/// Probability measure on [0,1]: atoms at both ends plus a piecewise constant
/// density on `N` equal cells of (0,1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    pub atom0: f64,
    pub atom1: f64,
    pub density: Vec<f64>,
}

impl GridMeasure {
    pub fn new(atom0: f64, atom1: f64, density: Vec<f64>) -> Result<Self> {
        let m = Self { atom0, atom1, density };
        m.validate()?;
        Ok(m)
    }

    /// Normalizes arbitrary nonnegative masses into a probability measure.
    pub fn from_unnormalized(atom0: f64, atom1: f64, density: Vec<f64>) -> Result<Self> {
        let mut m = Self { atom0, atom1, density };
        if m.grid_size() == 0 {
            return Err(GroupSelError::InvalidMeasure("empty grid".into()));
        }
        m.check_components()?;
        let total = m.mass();
        if !(total > 0.0) {
            return Err(GroupSelError::InvalidMeasure("zero total mass".into()));
        }
        m.scale(1.0 / total);
        Ok(m)
    }

    pub fn dirac0(grid_size: usize) -> Self {
        Self { atom0: 1.0, atom1: 0.0, density: vec![0.0; grid_size] }
    }

    pub fn two_atoms(weight0: f64, grid_size: usize) -> Result<Self> {
        Self::new(weight0, 1.0 - weight0, vec![0.0; grid_size])
    }

    /// Interior density proportional to `f` evaluated at cell centers.
    pub fn from_density_fn(grid_size: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / grid_size as f64;
        let density = (0..grid_size).map(|i| f((i as f64 + 0.5) * h)).collect();
        Self::from_unnormalized(0.0, 0.0, density)
    }

    pub fn uniform(grid_size: usize) -> Self {
        Self { atom0: 0.0, atom1: 0.0, density: vec![1.0; grid_size] }
    }

    pub fn grid_size(&self) -> usize {
        self.density.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.density.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.cell_width()
    }

    pub fn interior_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width()
    }

    pub fn mass(&self) -> f64 {
        self.atom0 + self.atom1 + self.interior_mass()
    }

    pub(crate) fn scale(&mut self, c: f64) {
        self.atom0 *= c;
        self.atom1 *= c;
        self.density.iter_mut().for_each(|p| *p *= c);
    }

    fn check_components(&self) -> Result<()> {
        let bad = |v: f64| !(v >= 0.0) || !v.is_finite();
        if bad(self.atom0) || bad(self.atom1) || self.density.iter().any(|&p| bad(p)) {
            return Err(GroupSelError::InvalidMeasure("components must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size() == 0 {
            return Err(GroupSelError::InvalidMeasure("empty grid".into()));
        }
        self.check_components()?;
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(GroupSelError::InvalidMeasure(format!("total mass {mass} is not 1")));
        }
        Ok(())
    }

    /// `<mu | f>` with `f` read at the atoms and the cell centers.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.cell_width();
        self.atom0 * f(0.0)
            + self.atom1 * f(1.0)
            + self.density.iter().enumerate().map(|(i, p)| p * f(self.center(i)) * h).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    /// Cumulative distribution function, linear inside each cell.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.mass();
        }
        let h = self.cell_width();
        let pos = x / h;
        let full = (pos.floor() as usize).min(self.grid_size() - 1);
        let below: f64 = self.density[..full].iter().sum::<f64>() * h;
        self.atom0 + below + self.density[full] * (x - full as f64 * h)
    }

    /// Interior part normalized to a probability density, if it has mass.
    pub fn conditioned_interior(&self) -> Option<Vec<f64>> {
        let m = self.interior_mass();
        (m > 0.0).then(|| self.density.iter().map(|p| p / m).collect())
    }

    /// Draw a point: an atom or a uniform point in a cell chosen by mass.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let h = self.cell_width();
        let mut u = rng.uniform() * self.mass();
        if u < self.atom0 {
            return 0.0;
        }
        u -= self.atom0;
        if u < self.atom1 {
            return 1.0;
        }
        u -= self.atom1;
        for (i, &p) in self.density.iter().enumerate() {
            let m = p * h;
            if u < m {
                return (i as f64 + rng.open01()) * h;
            }
            u -= m;
        }
        // rounding at the top end
        let last = self.density.iter().rposition(|&p| p > 0.0);
        match last {
            Some(i) => (i as f64 + rng.open01()) * h,
            None if self.atom1 > 0.0 => 1.0,
            None => 0.0,
        }
    }
}

/// Total-variation distance between two densities on the same grid.
pub fn tv_distance(p: &[f64], q: &[f64], cell_width: f64) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell_width
}

/// Wasserstein-1 distance between two measures on [0,1] given by CDFs,
/// integrated with the midpoint rule on `points` nodes.
pub fn wasserstein1_between(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, points: usize) -> f64 {
    popscale_core::stats::wasserstein1_cdf(a, b, points)
}
