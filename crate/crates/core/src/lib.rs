//! Max-stable dependence models for multivariate extremes.
//!
//! Models are described by their stable tail dependence function `l`,
//! backed by a closed form, a discrete spectral measure, or a generator
//! `A` evaluated by Monte Carlo through `l_A(x) = E[max_j (x_j A_j)^+]`.

pub mod cli;
pub mod closed_forms;
pub mod coefficients;
pub mod dependence;
pub mod empirical;
pub mod error;
pub mod generators;
pub mod normal;
pub mod output;
pub mod spec;
pub mod verify;

pub use closed_forms::{Family, MultivariateMOSpec};
pub use dependence::{
    ell_from_spectral, Backend, CachePolicy, DependenceModel, Estimate, MarginForm, McConfig, Point,
    SimplexWeight, SpectralAtom, SpectralAtoms,
};
pub use error::{Error, Result};
pub use generators::{Generator, GeneratorKind, IndicatorLaw};
