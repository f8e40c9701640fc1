//! Exact ground truth for the sketches and the statistical tools used to
//! check them.

pub mod stats;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::processes::{gnp::gnp_rate_numerator, tau, Target};

/// Exact frequency vector `v -> x(v)` in canonical form: indices whose
/// value is exactly zero are absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    entries: BTreeMap<u64, Vec<f64>>,
}

impl SparseVector {
    pub fn new(dim: usize) -> Self {
        SparseVector { dim, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let entry = self.entries.entry(v).or_insert_with(|| vec![0.0; y.len()]);
        for (e, d) in entry.iter_mut().zip(y) {
            *e += d;
        }
        if entry.iter().all(|x| *x == 0.0) {
            self.entries.remove(&v);
        }
        Ok(())
    }

    pub fn get(&self, v: u64) -> Option<&[f64]> {
        self.entries.get(&v).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.entries.iter().map(|(v, x)| (*v, x.as_slice()))
    }

    /// Number of nonzero entries.
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn negated(&self) -> SparseVector {
        SparseVector {
            dim: self.dim,
            entries: self.entries.iter().map(|(v, x)| (*v, x.iter().map(|e| -e).collect())).collect(),
        }
    }
}

/// `sum_v f_v(x(v))`, where `f_v` is the exponent the target assigns to `v`.
pub fn exact_moment(x: &SparseVector, target: &Target) -> Result<Complex64> {
    let d = target.validate()?;
    if !x.is_empty() && d != x.dim() {
        return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, xv) in x.iter() {
        acc += target.spec_for(v).exponent_unchecked(xv);
    }
    Ok(acc)
}

/// Exact jump law over `+-2 pi j / 2^w`: `P(+j) = P(-j) = numerators[j-1] / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteLaw {
    pub w: u32,
    pub numerators: Vec<u128>,
    pub denominator: u128,
}

impl DiscreteLaw {
    pub fn probability(&self, j: u64) -> f64 {
        self.numerators[j as usize - 1] as f64 / self.denominator as f64
    }

    /// Total mass over both signs, exactly.
    pub fn is_normalized(&self) -> bool {
        2 * self.numerators.iter().sum::<u128>() == self.denominator
    }

    /// Total-variation distance between two laws on the same support.
    pub fn total_variation(&self, other: &DiscreteLaw) -> f64 {
        assert_eq!(self.w, other.w);
        (1..1u64 << self.w).map(|j| (self.probability(j) - other.probability(j)).abs()).sum::<f64>()
    }
}

pub const MAX_ENUMERATION_W: u32 = 12;

/// The normalized jump law of the finite nearly periodic process:
/// `P(+-2 pi j / 2^w) = (2^{2 tau(j) + 1} + 1) / (2 (2^{2w} - 1))`.
pub fn enumerate_gnp_law(w: u32) -> Result<DiscreteLaw> {
    if !(1..=MAX_ENUMERATION_W).contains(&w) {
        return Err(Error::OutOfRange(format!("w must lie in [1, {MAX_ENUMERATION_W}], got {w}")));
    }
    Ok(DiscreteLaw {
        w,
        numerators: (1..1u64 << w).map(gnp_rate_numerator).collect(),
        denominator: 2 * ((1u128 << (2 * w)) - 1),
    })
}

/// Law of the bit-tape sampler with `depth_cap = w`, by walking every tape
/// prefix: tape B stops at `t` (or hits the cap) and tape A contributes
/// `t - 1` bits.
pub fn enumerate_streaming_law(w: u32) -> Result<DiscreteLaw> {
    if !(1..=MAX_ENUMERATION_W).contains(&w) {
        return Err(Error::OutOfRange(format!("w must lie in [1, {MAX_ENUMERATION_W}], got {w}")));
    }
    // every outcome has probability 2^-(B bits read) * 2^-(A bits) * 1/2
    let denominator = 1u128 << (2 * w);
    let mut numerators = vec![0u128; (1usize << w) - 1];
    for t in 1..=w {
        let b_bits = if t < w { t } else { w - 1 };
        let weight = 1u128 << (2 * w - b_bits - (t - 1) - 1);
        for a in 0..1u64 << (t - 1) {
            let num = (a << 1) | 1;
            let j = num << (w - t);
            debug_assert_eq!(tau(j), w - t);
            numerators[j as usize - 1] += weight;
        }
    }
    Ok(DiscreteLaw { w, numerators, denominator })
}
