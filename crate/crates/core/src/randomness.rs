//! Keyed, counter-based randomness.
//!
//! Every random quantity in a sketch is a pure function of an [`OracleKey`]
//! and a draw counter. Two sketches built with the same master seed therefore
//! see the same process sample for the same stream index, which is what makes
//! them linear and mergeable.
//!
//! The generator is a SplitMix64 stream whose starting point is derived from
//! the key and the counter. The bit layout is part of the serialized format
//! and pinned by [`ORACLE_VERSION`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand_core::{impls, RngCore};
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Version of the key-derivation and sampler transforms. Bumping it
/// invalidates merge compatibility with previously serialized sketches.
pub const ORACLE_VERSION: u16 = 2;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const KEY_INIT: u64 = 0xD1B5_4A32_D192_ED03;
const CTR_MUL: u64 = 0xA076_1D64_78BD_642F;
const CTR_ADD: u64 = 0xE703_7ED1_A0B4_28DB;

#[inline(always)]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline(always)]
fn absorb(h: u64, x: u64) -> u64 {
    mix64(h.rotate_left(23) ^ x.wrapping_mul(GAMMA))
}

/// 128-bit master seed. Serialized as a 32-digit hex string; config files may
/// also give a plain unsigned integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MasterSeed(pub u128);

impl MasterSeed {
    pub fn lo(self) -> u64 {
        self.0 as u64
    }

    pub fn hi(self) -> u64 {
        (self.0 >> 64) as u64
    }

    /// Derives an independent seed for a numbered sub-experiment (a trial, a
    /// side of a paired sketch, ...).
    pub fn derive(self, tag: u64, counter: u64) -> MasterSeed {
        let a = absorb(absorb(absorb(KEY_INIT ^ self.lo(), self.hi()), tag), counter);
        let b = absorb(a, counter ^ 0x5851_F42D_4C95_7F2D);
        MasterSeed(((a as u128) << 64) | b as u128)
    }
}

impl From<u64> for MasterSeed {
    fn from(v: u64) -> Self {
        MasterSeed(v as u128)
    }
}

impl fmt::Display for MasterSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:032x}", self.0)
    }
}

impl std::str::FromStr for MasterSeed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            u128::from_str_radix(hex, 16)
        } else {
            s.parse::<u128>()
        };
        parsed
            .map(MasterSeed)
            .map_err(|_| Error::InvalidConfig(format!("invalid master seed {s:?}")))
    }
}

impl Serialize for MasterSeed {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MasterSeed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(MasterSeed(v as u128)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Tags that separate the roles a draw can play under otherwise equal keys.
pub mod purpose {
    pub const UNIT_TIME: u32 = 1;
    pub const PATH_BASE: u32 = 2;
    pub const PATH_INCREMENT: u32 = 3;
    pub const JUMP_COUNT: u32 = 4;
    pub const JUMP_VALUE: u32 = 5;
    pub const SUBORDINATOR: u32 = 6;
    pub const KILL_TIME: u32 = 7;
    pub const PALETTE: u32 = 8;
    pub const STREAM_GEN: u32 = 9;
}

/// Full address of a random draw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OracleKey {
    pub master_seed: MasterSeed,
    /// Stream index `v`.
    pub index: u64,
    /// Repetition `j`.
    pub rep: u32,
    /// Dyadic level `k`; 0 for unit-time use.
    pub level: i32,
    pub purpose: u32,
}

impl OracleKey {
    pub fn new(master_seed: MasterSeed, index: u64, rep: u32, level: i32, purpose: u32) -> Self {
        OracleKey { master_seed, index, rep, level, purpose }
    }

    pub fn with_level(self, level: i32) -> Self {
        OracleKey { level, ..self }
    }

    pub fn with_purpose(self, purpose: u32) -> Self {
        OracleKey { purpose, ..self }
    }

    pub fn with_rep(self, rep: u32) -> Self {
        OracleKey { rep, ..self }
    }

    pub fn digest(&self) -> u64 {
        finish_digest(prefix_digest(self.master_seed, self.index, self.rep), self.level, self.purpose)
    }

    pub fn stream(&self, ctr: u64) -> DrawStream {
        DrawStream::from_digest(self.digest(), ctr)
    }
}

/// Digest of the `(seed, index, rep)` part of a key; hot loops cache it and
/// finish it per level with [`finish_digest`].
#[inline]
pub(crate) fn prefix_digest(seed: MasterSeed, index: u64, rep: u32) -> u64 {
    let h = mix64(seed.lo() ^ KEY_INIT);
    let h = absorb(h, seed.hi());
    let h = absorb(h, index);
    absorb(h, rep as u64)
}

#[inline]
pub(crate) fn finish_digest(prefix: u64, level: i32, purpose: u32) -> u64 {
    absorb(prefix, ((level as u32 as u64) << 32) | purpose as u64)
}

/// Sequence of words for one `(key, counter)` slot. Multi-word samplers
/// consume as many words as they need from the slot without touching other
/// counters.
#[derive(Debug, Clone)]
pub struct DrawStream {
    state: u64,
}

impl DrawStream {
    #[inline]
    pub(crate) fn from_digest(digest: u64, ctr: u64) -> Self {
        DrawStream { state: mix64(digest ^ ctr.wrapping_mul(CTR_MUL).wrapping_add(CTR_ADD)) }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Ziggurat; consumes a variable number of words.
    #[inline]
    pub fn next_exp1(&mut self) -> f64 {
        Exp1.sample(self)
    }

    /// Ziggurat; consumes a variable number of words.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Unit symmetric alpha-stable draw, characteristic function `exp(-|z|^alpha)`.
    #[inline]
    pub fn next_sym_stable(&mut self, alpha: f64) -> f64 {
        if alpha == 1.0 {
            let num = self.next_normal();
            return num / self.next_normal();
        }
        if alpha == 2.0 {
            return SQRT_2 * self.next_normal();
        }
        let v = PI * (self.next_open01() - 0.5);
        let w = self.next_exp1();
        let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
        a * ((v * (1.0 - alpha)).cos() / w).powf((1.0 - alpha) / alpha)
    }

    /// Unit one-sided q-stable draw (Kanter), Laplace transform `exp(-z^q)`.
    #[inline]
    pub fn next_pos_stable(&mut self, q: f64) -> f64 {
        let v = PI * self.next_open01();
        let w = self.next_exp1();
        let a = (q * v).sin() / v.sin().powf(1.0 / q);
        a * (((1.0 - q) * v).sin() / w).powf((1.0 - q) / q)
    }

    /// Poisson by inversion below mean 10 and by PTRS (Hörmann 1993) above.
    pub fn next_poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        if mean < 10.0 {
            self.poisson_inversion(mean, (-mean).exp())
        } else {
            self.poisson_ptrs(mean)
        }
    }

    #[inline]
    pub(crate) fn poisson_inversion(&mut self, mean: f64, exp_neg_mean: f64) -> u64 {
        let u = self.next_f64();
        let mut k = 0u64;
        let mut p = exp_neg_mean;
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            // cdf can stall a hair below 1.0 through rounding
            if p < 1e-300 && k as f64 > mean {
                break;
            }
        }
        k
    }

    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_open01();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -mean + k * loglam - statrs::function::gamma::ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

impl RngCore for DrawStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (DrawStream::next_u64(self) >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        DrawStream::next_u64(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// The first word of the `(key, ctr)` slot.
pub fn raw64(key: &OracleKey, ctr: u64) -> u64 {
    key.stream(ctr).next_u64()
}

/// Uniform on `[0, 1)`, 53-bit precision.
pub fn uniform01(key: &OracleKey, ctr: u64) -> f64 {
    key.stream(ctr).next_f64()
}

/// Inverse-CDF transform `-ln(1 - u) / rate`.
pub fn exponential_quantile(u: f64, rate: f64) -> f64 {
    -(1.0 - u).ln() / rate
}

pub fn exponential(key: &OracleKey, ctr: u64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::OutOfRange(format!("exponential rate must be positive, got {rate}")));
    }
    Ok(exponential_quantile(uniform01(key, ctr), rate))
}

/// Centered normal with standard deviation `sigma`.
pub fn gaussian(key: &OracleKey, ctr: u64, sigma: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return 0.0;
    }
    sigma * key.stream(ctr).next_normal()
}

/// Largest supported Poisson mean.
pub const POISSON_MAX_MEAN: f64 = (1u64 << 30) as f64;

pub fn poisson(key: &OracleKey, ctr: u64, mean: f64) -> Result<u64> {
    if !(0.0..=POISSON_MAX_MEAN).contains(&mean) {
        return Err(Error::OutOfRange(format!("poisson mean must lie in [0, 2^30], got {mean}")));
    }
    Ok(key.stream(ctr).next_poisson(mean))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("stability index must lie in (0, 2], got {alpha}")))
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("subordinator index must lie in (0, 1), got {q}")))
    }
}

/// Draw with characteristic function `exp(-|z|^alpha)`: Chambers–Mallows–Stuck,
/// a normal ratio at `alpha = 1`, a scaled normal at `alpha = 2`.
pub fn stable_symmetric(key: &OracleKey, ctr: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(key.stream(ctr).next_sym_stable(alpha))
}

/// Positive q-stable draw with Laplace transform `exp(-z^q)`.
pub fn stable_onesided(key: &OracleKey, ctr: u64, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(key.stream(ctr).next_pos_stable(q))
}
