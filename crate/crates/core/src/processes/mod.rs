//! The catalog of Lévy processes: characteristic exponents and path sampling.

mod exponent;
pub mod gnp;
mod sampler;
mod spec;
mod target;

pub use exponent::GNP_STREAMING_RATE;
pub use gnp::{gnp_coefficients, gnp_jump_streaming, gnp_target, gnp_total_rate, tau, GnpCoefficient};
pub use sampler::{DyadicPath, PreparedProcess, MAX_LEVEL};
pub use spec::{Covariance, Jump, ProcessSpec, SpectralAtom};
pub use target::{Assignment, Palette, Target};

pub(crate) use exponent::dot;
pub(crate) use sampler::kill_level;

use crate::error::Result;
use crate::randomness::OracleKey;

/// Draws `X_1` for a spec that admits direct unit-time sampling.
pub fn sample_unit_time(spec: &ProcessSpec, key: &OracleKey) -> Result<Vec<f64>> {
    PreparedProcess::new(spec)?.sample_unit_time(key)
}

/// Samples the path at `t = 2^-k` for `k = 0..=levels`.
pub fn sample_dyadic_path(spec: &ProcessSpec, key: &OracleKey, levels: u32) -> Result<DyadicPath> {
    PreparedProcess::new(spec)?.sample_dyadic_path(key, levels)
}
