//! Exponents and constants estimated from samples and trajectory tails.

mod characteristic;
mod critical;
mod extrapolate;
mod lojasiewicz;
mod params;
pub mod rational;
mod region;
mod sampler;

use crate::polyfun::PolyError;

pub use characteristic::{
    estimate_characteristic_exponent, exponent_from_series, ExponentReport, DEFAULT_DENOMINATOR_BOUND, MIN_TAIL,
};
pub use critical::{estimate_asymptotic_critical_value, CriticalValueReport};
pub(crate) use critical::pow_l;
pub use extrapolate::{beta_grid, extrapolate, TailLimit, TailModel};
pub use lojasiewicz::{
    constant_for, estimate_bochnak_constant, estimate_lojasiewicz, fit_envelope, lojasiewicz_constant,
    BochnakEstimate, LojasiewiczEstimate,
};
pub use params::{band_from_tail, estimate_omega, ControlParams, DEFAULT_ALPHA, DEFAULT_W_DELTA, OMEGA_CAP};
pub(crate) use params::tail_range;
pub use region::{classify_region, classify_split, Memberships, Region, RegionLabel};
pub use sampler::{radical_inverse, ExplicitPoints, PointSource, ShellSampler};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExponentError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("every sample lies on the zero set of f")]
    AllSamplesOnZeroSet,
    #[error("tail has {have} samples, need at least {need}")]
    TailTooShort { have: usize, need: usize },
    #[error("tail is not inside any W^eps (min |radial|/|spherical| = {eps:e})")]
    TailOutsideWEps { eps: f64 },
    #[error("no limit detected: tail spread {spread}")]
    NoLimit { spread: f64 },
    #[error("estimated limit {0} is not positive")]
    NonPositive(f64),
    #[error("non-finite values in the tail")]
    NonFinite,
    #[error("F = f/r^l diverges along the tail (wrong l?)")]
    Diverging,
    #[error("invalid control parameters: {0}")]
    InvalidParams(String),
}
