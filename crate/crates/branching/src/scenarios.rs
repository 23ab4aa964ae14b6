//! Packaged tree models.

use popscale_core::{Boundary, DiffusionSpec};

use crate::birth::{BirthForm, ParametricBirthFamily};
use crate::kernels::{Fragmentation, TraitMarginal, TransitionKernel};
use crate::simulate::{BranchingSpec, MarkovTreeSpec};
use crate::tree::KeepRule;

/// Correlation of normal scores in [`copula_triangular`].
pub const COPULA_CORRELATION: f64 = 0.35;

/// Markov tree with a triangular invariant density (Hölder order 1 at its mode) and a
/// Gaussian-copula transition; a complete binary tree with `2^(generations+1) − 1` nodes.
pub fn copula_triangular(generations: u32) -> MarkovTreeSpec {
    MarkovTreeSpec {
        kernel: TransitionKernel::GaussianCopula {
            marginal: TraitMarginal::Triangular,
            correlation: COPULA_CORRELATION,
        },
        generations,
        keep: KeepRule::Full,
        root_trait: 0.5,
    }
}

/// Complete tree whose traits are drawn afresh from `Beta(2, 5)` at every birth.
pub fn independent_beta(generations: u32) -> MarkovTreeSpec {
    MarkovTreeSpec {
        kernel: TransitionKernel::Independent { marginal: TraitMarginal::Beta { a: 2.0, b: 5.0 } },
        generations,
        keep: KeepRule::Full,
        root_trait: 0.3,
    }
}

/// Domain of the size model; reflection at the top is rarely reached.
pub const SIZE_DOMAIN: (f64, f64) = (0.0, 4.0);

/// Rate parameters used to generate [`size_growth`] trees.
pub const SIZE_GROWTH_THETA: [f64; 2] = [0.5, 1.5];

/// Affine family fitted to [`size_growth`] trees.
pub fn affine_family() -> ParametricBirthFamily {
    ParametricBirthFamily::new(BirthForm::Affine, vec![0.01, 0.0], vec![5.0, 5.0]).expect("valid bounds")
}

/// Cells grow exponentially with a little multiplicative noise, divide at rate
/// `ϑ₀ + ϑ₁·size` and split their size with a share drawn from `Beta(20, 20)`.
pub fn size_growth(generations: u32, keep: KeepRule) -> BranchingSpec {
    let theta = SIZE_GROWTH_THETA.to_vec();
    let birth = ParametricBirthFamily::new(BirthForm::Affine, vec![0.01, 0.0], vec![5.0, 5.0]).expect("valid bounds");
    BranchingSpec {
        flow: DiffusionSpec::new(|x| x, |x| 0.1 * x, SIZE_DOMAIN, Boundary::Reflect).expect("valid flow"),
        birth_bound: birth.rate(&theta, SIZE_DOMAIN.1),
        birth,
        theta,
        fragmentation: Fragmentation::Beta { a: 20.0, b: 20.0 },
        generations,
        keep,
        root_trait: 0.6,
        path_dt: 0.01,
    }
}

/// Constant division rate 1 on a trait that does not move; lifetimes are `Exp(1)`.
pub fn constant_rate(generations: u32, keep: KeepRule) -> BranchingSpec {
    BranchingSpec {
        flow: DiffusionSpec::new(|_| 0.0, |_| 0.0, (0.0, 1.0), Boundary::None).expect("valid flow"),
        birth: ParametricBirthFamily::new(BirthForm::Constant, vec![0.01], vec![10.0]).expect("valid bounds"),
        theta: vec![1.0],
        birth_bound: 1.0,
        fragmentation: Fragmentation::Uniform { low: 0.5, high: 0.5 },
        generations,
        keep,
        root_trait: 1.0,
        path_dt: 0.05,
    }
}
