//! Packaged ecologies.

use crate::ecology::{EcologySpec, MarkerGenerator, MutationLaw, TraitFunction};

/// Swap rate of the two markers in the packaged ecologies.
pub const MARKER_SWAP_RATE: f64 = 0.5;

/// `b(x) = 1 + x`, `d = 0`, `η = C = 1`: `n̂_x = 1 + x` and `f(y, x) = y − x`.
pub fn linear_fitness(mutation: MutationLaw) -> EcologySpec {
    EcologySpec {
        birth: TraitFunction::Affine { intercept: 1.0, slope: 1.0 },
        death: TraitFunction::Constant { value: 0.0 },
        sensitivity: TraitFunction::Constant { value: 1.0 },
        competition: TraitFunction::Constant { value: 1.0 },
        mutation,
        mutation_modulator: TraitFunction::Constant { value: 1.0 },
        markers: MarkerGenerator::symmetric_pair(MARKER_SWAP_RATE),
        trait_box: (0.0, 6.0),
        fitness_gradient: Some(TraitFunction::Constant { value: 1.0 }),
    }
}

/// [`linear_fitness`] with the single mutation step `+1`.
pub fn linear_fitness_upward() -> EcologySpec {
    linear_fitness(MutationLaw::single(1))
}

/// [`linear_fitness`] with steps `±1` of probability 1/2; its canonical equation is
/// `dx/dt = (1 + x)/2`.
pub fn linear_fitness_symmetric() -> EcologySpec {
    linear_fitness(MutationLaw::symmetric_unit())
}

/// Closed-form canonical-equation path of [`linear_fitness_symmetric`].
pub fn linear_symmetric_cead(x0: f64, t: f64) -> f64 {
    (1.0 + x0) * (0.5 * t).exp() - 1.0
}

/// `b(x) = 2 − (x − 1)²`, `d = 0.2`, `η = C = 1` on `[0, 2]`: the selection gradient
/// `−2(x − 1)` vanishes at the peak `x = 1`.
pub fn quadratic_peak() -> EcologySpec {
    EcologySpec {
        birth: TraitFunction::Quadratic { peak: 2.0, curvature: 1.0, optimum: 1.0 },
        death: TraitFunction::Constant { value: 0.2 },
        sensitivity: TraitFunction::Constant { value: 1.0 },
        competition: TraitFunction::Constant { value: 1.0 },
        mutation: MutationLaw::symmetric_unit(),
        mutation_modulator: TraitFunction::Constant { value: 1.0 },
        markers: MarkerGenerator::symmetric_pair(MARKER_SWAP_RATE),
        trait_box: (0.0, 2.0),
        fitness_gradient: None,
    }
}

/// [`quadratic_peak`] with Gaussian competition of width 0.3: traits on both sides of the
/// peak can coexist.
pub fn niche_competition() -> EcologySpec {
    EcologySpec { competition: TraitFunction::Gaussian { amplitude: 1.0, width: 0.3 }, ..quadratic_peak() }
}

/// Trait-free ecology with `b = 1`, `n̂ = 1` and the given marker generator.
pub fn neutral_markers(markers: MarkerGenerator) -> EcologySpec {
    EcologySpec {
        birth: TraitFunction::Constant { value: 1.0 },
        death: TraitFunction::Constant { value: 0.0 },
        sensitivity: TraitFunction::Constant { value: 1.0 },
        competition: TraitFunction::Constant { value: 1.0 },
        mutation: MutationLaw::single(1),
        mutation_modulator: TraitFunction::Constant { value: 0.0 },
        markers,
        trait_box: (0.0, 1.0),
        fitness_gradient: None,
    }
}

pub fn packaged() -> Vec<(&'static str, EcologySpec)> {
    vec![
        ("linear_fitness_upward", linear_fitness_upward()),
        ("linear_fitness_symmetric", linear_fitness_symmetric()),
        ("quadratic_peak", quadratic_peak()),
        ("niche_competition", niche_competition()),
    ]
}

pub fn by_name(name: &str) -> Option<EcologySpec> {
    packaged().into_iter().find(|(n, _)| *n == name).map(|(_, e)| e)
}
