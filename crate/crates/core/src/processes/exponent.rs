//! Characteristic exponents `f` with `E exp(i<z, X_t>) = exp(-t f(z))`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::gnp::{gnp_rate, tau};
use super::spec::{Covariance, ProcessSpec};
use crate::error::{Error, Result};

const DIRECT_SUM_LIMIT: u64 = 4096;

impl ProcessSpec {
    /// Evaluates the characteristic exponent at `z`.
    pub fn char_exponent(&self, z: &[f64]) -> Result<Complex64> {
        let d = self.validate()?;
        if z.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: z.len() });
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.exponent_unchecked(z))
    }

    pub(crate) fn exponent_unchecked(&self, z: &[f64]) -> Complex64 {
        let real = |x: f64| Complex64::new(x, 0.0);
        match self {
            ProcessSpec::Drift { gamma } => Complex64::new(0.0, -dot(gamma, z)),
            ProcessSpec::Gaussian { covariance } => match covariance {
                Covariance::Scalar(s) => real(0.5 * s * z[0] * z[0]),
                Covariance::Matrix(a) => {
                    let mut q = 0.0;
                    for (i, row) in a.iter().enumerate() {
                        q += z[i] * dot(row, z);
                    }
                    real(0.5 * q)
                }
            },
            ProcessSpec::Stable1D { alpha } => real(z[0].abs().powf(*alpha)),
            ProcessSpec::StableSpectral { alpha, atoms } => {
                real(atoms.iter().map(|a| a.weight * dot(&a.direction, z).abs().powf(*alpha)).sum())
            }
            ProcessSpec::CompoundPoisson { jumps } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for jump in jumps {
                    let theta = dot(&jump.value, z);
                    acc += jump.rate * Complex64::new(1.0 - theta.cos(), -theta.sin());
                }
                acc
            }
            ProcessSpec::SubordinatedLpq { p, q, .. } => {
                real(z.iter().map(|x| x.abs().powf(*p)).sum::<f64>().powf(*q))
            }
            ProcessSpec::PureKilled { rate } => real(if z.iter().any(|x| *x != 0.0) { *rate } else { 0.0 }),
            ProcessSpec::ZpUniform { modulus } => real(zp_exponent(*modulus, z[0])),
            ProcessSpec::GnpFinite { w } => real(gnp_finite_exponent(*w, z[0])),
            ProcessSpec::GnpStreaming { depth_cap } => real(gnp_streaming_exponent(*depth_cap, z[0])),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `z` as an integer when it is one and small enough for exact modular work.
fn as_exact_int(z: f64) -> Option<i64> {
    (z.fract() == 0.0 && z.abs() < 9.0e15).then_some(z as i64)
}

/// `cos(2 pi num / den)` with the numerator reduced first.
fn cos_frac(num: i128, den: u64) -> f64 {
    let r = num.rem_euclid(den as i128) as f64;
    (TAU * r / den as f64).cos()
}

fn zp_exponent(modulus: u64, z: f64) -> f64 {
    if let Some(n) = as_exact_int(z) {
        return if n.rem_euclid(modulus as i64) == 0 { 0.0 } else { 1.0 };
    }
    let p = modulus as f64;
    if modulus <= DIRECT_SUM_LIMIT {
        let s: f64 = (0..modulus).map(|j| (TAU * j as f64 * z / p).cos()).sum();
        return 1.0 - s / p;
    }
    let half = std::f64::consts::PI * z / p;
    let s = (std::f64::consts::PI * z).sin() * ((p - 1.0) * half).cos() / half.sin();
    1.0 - s / p
}

fn gnp_finite_exponent(w: u32, z: f64) -> f64 {
    let n = 1u64 << w;
    let exact = as_exact_int(z);
    let mut acc = 0.0;
    for j in 1..n {
        let c = match exact {
            Some(zi) => cos_frac(j as i128 * zi as i128, n),
            None => (TAU * j as f64 * z / n as f64).cos(),
        };
        acc += gnp_rate(w, j) * (1.0 - c);
    }
    acc
}

/// Probability that the streaming sampler stops its B tape at position `t`.
pub(crate) fn streaming_level_prob(t: u32, cap: u32) -> f64 {
    if t < cap {
        (-(t as f64)).exp2()
    } else {
        (-((cap - 1) as f64)).exp2()
    }
}

/// Rate of the streaming construction: the value that makes its exponent 1
/// at odd integers in the uncapped limit.
pub const GNP_STREAMING_RATE: f64 = 2.0 / 3.0;

fn gnp_streaming_exponent(cap: u32, z: f64) -> f64 {
    let exact = as_exact_int(z);
    let mut acc = 0.0;
    for t in 1..=cap {
        let count = (1u64 << (t - 1)) as f64;
        // sum over odd j < 2^t of (1 - cos(2 pi j z / 2^t))
        let inner = match exact {
            Some(zi) => {
                let level = tau(zi.unsigned_abs()).min(64);
                if zi == 0 || level >= t {
                    0.0
                } else if level == t - 1 {
                    2.0 * count
                } else {
                    count
                }
            }
            None => {
                let period = (1u64 << t) as f64;
                let zr = z.rem_euclid(period);
                let s_full = (TAU * z.rem_euclid(1.0)).sin();
                let s_part = (TAU * zr / period).sin();
                count - s_full / (2.0 * s_part)
            }
        };
        acc += streaming_level_prob(t, cap) * inner / count;
    }
    GNP_STREAMING_RATE * acc
}
