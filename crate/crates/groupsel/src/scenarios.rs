//! Models shipped with the lab and used by the verification suites.

use crate::{GridMeasure, PenalizedWfModel, Penalty};

/// Height of the group-selection hump in [`polymorphic`].
pub const POLYMORPHIC_HEIGHT: f64 = 20.0;

/// Strong group selection for mixed groups: `r = 20 * 4 x (1 - x)`.
pub fn polymorphic() -> PenalizedWfModel {
    PenalizedWfModel::new(1.0, 1.0, Penalty::Hump { height: POLYMORPHIC_HEIGHT }).expect("valid model")
}

/// Groups of cooperators reproduce fastest: `r = -(1 - x)`.
pub fn fixation_c() -> PenalizedWfModel {
    PenalizedWfModel::new(1.0, 1.0, Penalty::Linear { at0: -1.0, at1: 0.0 }).expect("valid model")
}

/// Groups of defectors reproduce fastest: `r = -x`.
pub fn fixation_d() -> PenalizedWfModel {
    PenalizedWfModel::new(1.0, 1.0, Penalty::Linear { at0: 0.0, at1: -1.0 }).expect("valid model")
}

/// Noise levels of the shipped sigma scan (on [`fixation_c`]).
pub const SIGMA_SCAN: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0];

/// Initial law concentrated on mostly-defector groups, density `∝ (1 - x)^4`.
pub fn defector_heavy_start(grid_size: usize) -> GridMeasure {
    GridMeasure::from_density_fn(grid_size, |x| (1.0 - x).powi(4)).expect("positive density")
}

/// Initial law of the Feynman–Kac comparison, density `∝ x (1 - x)`.
pub fn feynman_kac_start(grid_size: usize) -> GridMeasure {
    GridMeasure::from_density_fn(grid_size, |x| x * (1.0 - x)).expect("positive density")
}
