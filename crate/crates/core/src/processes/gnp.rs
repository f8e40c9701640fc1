//! The nearly periodic exponent `g(x) = 2^{-tau(x)}` and its compound
//! Poisson representations.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::spec::{MAX_DEPTH_CAP, MAX_GNP_W};
use crate::error::{Error, Result};
use crate::randomness::{DrawStream, OracleKey};

/// Dyadic valuation: the position of the lowest set bit. `tau(0)` is 64.
#[inline]
pub fn tau(x: u64) -> u32 {
    x.trailing_zeros()
}

/// `g(x) = 2^{-tau(x)}` for `2^w ∤ x`, and 0 on multiples of `2^w`.
pub fn gnp_target(w: u32, x: i64) -> f64 {
    let x = x.unsigned_abs();
    let t = tau(x);
    if t >= w {
        0.0
    } else {
        (-(t as f64)).exp2()
    }
}

/// Numerator of the rate of frequency `j` over the common denominator
/// [`gnp_rate_denominator`].
#[inline]
pub fn gnp_rate_numerator(j: u64) -> u128 {
    (1u128 << (2 * tau(j) + 1)) + 1
}

/// `3 * 2^(2w - 1)`.
pub fn gnp_rate_denominator(w: u32) -> u128 {
    3u128 << (2 * w - 1)
}

#[inline]
pub(crate) fn gnp_rate(w: u32, j: u64) -> f64 {
    gnp_rate_numerator(j) as f64 / gnp_rate_denominator(w) as f64
}

/// Total jump rate `(2^{2w} - 1) / (3 * 2^{2w-1})`.
pub fn gnp_total_rate(w: u32) -> f64 {
    ((1u128 << (2 * w)) - 1) as f64 / gnp_rate_denominator(w) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnpCoefficient {
    pub j: u64,
    /// Jump magnitude `2 pi j / 2^w`; half the rate sits on each sign.
    pub magnitude: f64,
    pub rate: f64,
}

/// Rates of the frequencies `j = 1 .. 2^w - 1`.
pub fn gnp_coefficients(w: u32) -> Result<Vec<GnpCoefficient>> {
    if !(1..=MAX_GNP_W).contains(&w) {
        return Err(Error::OutOfRange(format!("w must lie in [1, {MAX_GNP_W}], got {w}")));
    }
    let n = 1u64 << w;
    Ok((1..n)
        .map(|j| GnpCoefficient { j, magnitude: TAU * j as f64 / n as f64, rate: gnp_rate(w, j) })
        .collect())
}

/// Outcome of one pass over the two bit tapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeDraw {
    /// Stop position `T` on tape B, capped.
    pub level: u32,
    /// Odd numerator of the binary fraction, over `2^level`.
    pub numerator: u64,
    pub negative: bool,
}

impl TapeDraw {
    pub fn jump(&self) -> f64 {
        let mag = TAU * self.numerator as f64 / (1u64 << self.level) as f64;
        if self.negative {
            -mag
        } else {
            mag
        }
    }
}

#[inline]
pub(crate) fn read_tapes(stream: &mut DrawStream, cap: u32) -> TapeDraw {
    let b = stream.next_u64();
    let a = stream.next_u64();
    // tape B bit i (1-based) is bit i-1 of the word; zero word counts as no stop
    let level = (b.trailing_zeros() + 1).min(cap);
    // tape A bits 1..level-1 are the top bits of the word
    let prefix = if level == 1 { 0 } else { a >> (65 - level) };
    TapeDraw { level, numerator: (prefix << 1) | 1, negative: a & 1 == 1 }
}

/// One jump of the bit-tape sampler: `2 pi xi (sum_{j<T} A_j 2^-j + 2^-T)`.
pub fn gnp_jump_streaming(key: &OracleKey, ctr: u64, depth_cap: u32) -> Result<f64> {
    if !(1..=MAX_DEPTH_CAP).contains(&depth_cap) {
        return Err(Error::OutOfRange(format!("depth cap must lie in [1, {MAX_DEPTH_CAP}], got {depth_cap}")));
    }
    Ok(read_tapes(&mut key.stream(ctr), depth_cap).jump())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::stats::chi_square_p_value;
    use crate::randomness::{purpose, MasterSeed};

    #[test]
    fn coefficient_reference_values() {
        let c1 = gnp_coefficients(1).unwrap();
        assert_eq!(c1.len(), 1);
        assert_eq!(c1[0].rate, 0.5);
        let c5 = gnp_coefficients(5).unwrap();
        assert_eq!(c5.len(), 31);
        assert_eq!(c5[0].rate, 3.0 / 1536.0);
        let total: f64 = c5.iter().map(|c| c.rate).sum();
        assert!((total - 1023.0 / 1536.0).abs() < 1e-15);
        assert!(gnp_coefficients(0).is_err());
        assert!(gnp_coefficients(17).is_err());
    }

    #[test]
    fn rate_numerators_sum_exactly() {
        for w in 1..=16u32 {
            let s: u128 = (1..1u64 << w).map(gnp_rate_numerator).sum();
            assert_eq!(s, (1u128 << (2 * w)) - 1, "w={w}");
        }
    }

    #[test]
    fn streaming_jump_range_and_level_law() {
        let cap = 12;
        let key = OracleKey::new(MasterSeed::from(5u64), 0, 0, 0, purpose::JUMP_VALUE);
        let mut counts = vec![0u64; cap as usize];
        let n = 1_000_000u64;
        for c in 0..n {
            let draw = read_tapes(&mut key.stream(c), cap);
            let j = draw.jump();
            assert!(j.abs() > 0.0 && j.abs() < TAU);
            assert_eq!(draw.numerator % 2, 1);
            assert!(draw.numerator < 1 << draw.level);
            counts[draw.level as usize - 1] += 1;
        }
        let expected: Vec<f64> = (1..=cap)
            .map(|t| crate::processes::exponent::streaming_level_prob(t, cap) * n as f64)
            .collect();
        // merge the sparse tail so every cell has a healthy expectation
        let (mut obs, mut exp) = (counts[..9].to_vec(), expected[..9].to_vec());
        obs.push(counts[9..].iter().sum());
        exp.push(expected[9..].iter().sum());
        let p = chi_square_p_value(&obs, &exp);
        assert!(p > 0.001, "p={p}");
    }

    #[test]
    fn target_values() {
        assert_eq!(gnp_target(5, 8), 0.125);
        assert_eq!(gnp_target(5, 32), 0.0);
        assert_eq!(gnp_target(5, -3), 1.0);
        assert_eq!(gnp_target(5, 0), 0.0);
    }
}
