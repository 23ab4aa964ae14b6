use popscale_core::DiffusionSpec;
use serde::{Deserialize, Serialize};

use crate::{GroupSelError, Result};

/// Group-level selection coefficient `r` on [0,1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Penalty {
    Constant {
        value: f64,
    },
    /// `at0 + (at1 - at0) x`
    Linear {
        at0: f64,
        at1: f64,
    },
    /// `height * 4 x (1 - x)`, maximal at 1/2 only.
    Hump {
        height: f64,
    },
    /// Piecewise linear through equally spaced nodes on [0,1].
    Tabulated {
        values: Vec<f64>,
    },
}

impl Penalty {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Penalty::Constant { value } => *value,
            Penalty::Linear { at0, at1 } => at0 + (at1 - at0) * x,
            Penalty::Hump { height } => height * 4.0 * x * (1.0 - x),
            Penalty::Tabulated { values } => {
                let k = values.len() - 1;
                let pos = x.clamp(0.0, 1.0) * k as f64;
                let i = (pos.floor() as usize).min(k.saturating_sub(1));
                let w = pos - i as f64;
                if k == 0 {
                    values[0]
                } else {
                    values[i] * (1.0 - w) + values[i + 1] * w
                }
            }
        }
    }

    /// `factor * r`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Penalty::Constant { value } => Penalty::Constant { value: factor * value },
            Penalty::Linear { at0, at1 } => Penalty::Linear { at0: factor * at0, at1: factor * at1 },
            Penalty::Hump { height } => Penalty::Hump { height: factor * height },
            Penalty::Tabulated { values } => Penalty::Tabulated { values: values.iter().map(|v| factor * v).collect() },
        }
    }

    /// Supremum of `r` on [0,1]; exact for every form.
    pub fn max_value(&self) -> f64 {
        match self {
            Penalty::Constant { value } => *value,
            Penalty::Linear { at0, at1 } => at0.max(*at1),
            Penalty::Hump { height } => height.max(0.0),
            Penalty::Tabulated { values } => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            Penalty::Constant { value } => value.is_finite(),
            Penalty::Linear { at0, at1 } => at0.is_finite() && at1.is_finite(),
            Penalty::Hump { height } => height.is_finite(),
            Penalty::Tabulated { values } => {
                if values.len() < 2 {
                    return Err(GroupSelError::param("r", "tabulated form needs at least two nodes"));
                }
                values.iter().all(|v| v.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(GroupSelError::param("r", "values must be finite"))
        }
    }
}

/// Wright–Fisher diffusion `dX = -s X(1-X) dt + sigma sqrt(X(1-X)) dB`
/// penalized by the group selection coefficient `r`.
///
/// `offset` is added to `r`; [`PenalizedWfModel::shifted_nonpositive`]
/// picks it so that `r <= 0` and the penalty reads as a death rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenalizedWfModel {
    pub selection: f64,
    pub sigma: f64,
    pub penalty: Penalty,
    #[serde(default)]
    pub offset: f64,
}

impl PenalizedWfModel {
    pub fn new(selection: f64, sigma: f64, penalty: Penalty) -> Result<Self> {
        let m = Self { selection, sigma, penalty, offset: 0.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.selection.is_finite() {
            return Err(GroupSelError::param("s", "must be finite"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(GroupSelError::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !self.offset.is_finite() {
            return Err(GroupSelError::param("offset", "must be finite"));
        }
        self.penalty.validate()
    }

    pub fn r(&self, x: f64) -> f64 {
        self.penalty.eval(x) + self.offset
    }

    /// Same model with `c` added to `r`.
    pub fn with_added_constant(&self, c: f64) -> Self {
        Self { offset: self.offset + c, ..self.clone() }
    }

    /// Same dynamics with `r` shifted so that its maximum is 0.
    pub fn shifted_nonpositive(&self) -> Self {
        Self { offset: -self.penalty.max_value(), ..self.clone() }
    }

    /// Constant added to the original `r` by [`Self::shifted_nonpositive`].
    pub fn nonpositive_shift(&self) -> f64 {
        -self.penalty.max_value() - self.offset
    }

    /// Death rates `(rho_0, rho_1) = (-r(0), -r(1))` of the pure states.
    pub fn boundary_rates(&self) -> (f64, f64) {
        (-self.r(0.0), -self.r(1.0))
    }

    pub fn diffusion(&self) -> DiffusionSpec {
        DiffusionSpec::wright_fisher(self.selection, self.sigma)
    }

    pub fn with_penalty(&self, penalty: Penalty) -> Self {
        Self { penalty, ..self.clone() }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..self.clone() }
    }
}
