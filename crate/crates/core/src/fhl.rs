//! Fourier–Hahn–Lévy decomposition.
//!
//! A symmetric function on `Z_p` with `f(0) = 0` is written as
//! `f(x) = sum_{j=1}^{p/2} c_j (1 - cos(2 pi j x / p))`. Splitting the
//! coefficients by sign gives two nonnegative combinations, each of which is
//! the exponent of a symmetric compound Poisson process, so `f`-moments are
//! estimated as the difference of two tower estimates.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{Jump, ProcessSpec};
use crate::randomness::MasterSeed;
use crate::tower::{EstimateFlags, EstimateReport, TowerConfig, TowerSketch};

/// Largest period summed directly; longer periods go through an FFT.
pub const DIRECT_LIMIT: usize = 4096;
pub const MAX_PERIOD: usize = 1 << 20;
/// Largest negative coefficient for which a function counts as an exponent.
pub const REPRESENTABLE_TOL: f64 = 1e-9;

const SIDE_TAG: u64 = 0x6668_6c5f_7369_6465;

/// Folded cosine coefficients split by sign. Entry `j` multiplies
/// `1 - cos(2 pi j x / p)`; entry 0 is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhlDecomposition {
    pub period: usize,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    /// Max absolute reconstruction error over `x = 0..p-1`.
    pub residual: f64,
}

/// Decomposition as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhlReport {
    pub period: usize,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    pub residual: f64,
    pub levy_representable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Fft,
    /// Direct up to [`DIRECT_LIMIT`], FFT above.
    Auto,
}

impl Method {
    fn use_fft(self, p: usize) -> bool {
        match self {
            Method::Direct => false,
            Method::Fft => true,
            Method::Auto => p > DIRECT_LIMIT,
        }
    }
}

fn check_function(values: &[f64], period: usize) -> Result<()> {
    if values.len() != period {
        return Err(Error::InvalidFunction(format!("{} values given for period {period}", values.len())));
    }
    if period < 4 || !period.is_multiple_of(2) || period > MAX_PERIOD {
        return Err(Error::InvalidFunction(format!("period must be even and in [4, 2^20], got {period}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let tol = 1e-12 * values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if values[0].abs() > tol {
        return Err(Error::InvalidFunction(format!("f(0) must be 0, got {}", values[0])));
    }
    for x in 1..period {
        if (values[x] - values[period - x]).abs() > tol {
            return Err(Error::InvalidFunction(format!(
                "f is not symmetric: f({x}) = {} but f({}) = {}",
                values[x],
                period - x,
                values[period - x]
            )));
        }
    }
    Ok(())
}

/// `cos(2 pi r / p)` for `r = 0..p-1`.
fn cos_table(p: usize) -> Vec<f64> {
    (0..p).map(|r| (TAU * r as f64 / p as f64).cos()).collect()
}

/// Signed folded coefficients `c_j`, `j = 0..=p/2`.
pub fn cosine_coefficients(values: &[f64], period: usize, method: Method) -> Result<Vec<f64>> {
    check_function(values, period)?;
    let p = period;
    let half = p / 2;
    let mut coef = vec![0.0; half + 1];
    if method.use_fft(p) {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(p).process(&mut buf);
        for (j, c) in coef.iter_mut().enumerate().skip(1) {
            *c = -buf[j].re / p as f64;
        }
    } else {
        let table = cos_table(p);
        for (j, c) in coef.iter_mut().enumerate().skip(1) {
            let mut s = 0.0;
            for (x, &f) in values.iter().enumerate() {
                s += f * table[(j * x) % p];
            }
            *c = -s / p as f64;
        }
    }
    // j and p - j carry the same cosine
    for c in coef.iter_mut().take(half).skip(1) {
        *c *= 2.0;
    }
    Ok(coef)
}

/// `sum_j c_j (1 - cos(2 pi j x / p))` for `x = 0..p-1`.
pub fn reconstruct(coef: &[f64], period: usize, method: Method) -> Vec<f64> {
    let p = period;
    let half = p / 2;
    let total: f64 = coef.iter().sum();
    if method.use_fft(p) {
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for j in 1..half {
            buf[j] = Complex64::new(coef[j] / 2.0, 0.0);
            buf[p - j] = buf[j];
        }
        buf[half] = Complex64::new(coef[half], 0.0);
        FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
        buf.iter().map(|c| total - c.re).collect()
    } else {
        let table = cos_table(p);
        (0..p)
            .map(|x| {
                let mut s = 0.0;
                for (j, &c) in coef.iter().enumerate().skip(1) {
                    s += c * (1.0 - table[(j * x) % p]);
                }
                s
            })
            .collect()
    }
}

/// Decomposes `f` given by its values on `0..p-1`.
pub fn fhl_decompose(values: &[f64], period: usize) -> Result<FhlDecomposition> {
    fhl_decompose_with(values, period, Method::Auto)
}

pub fn fhl_decompose_with(values: &[f64], period: usize, method: Method) -> Result<FhlDecomposition> {
    let coef = cosine_coefficients(values, period, method)?;
    let rebuilt = reconstruct(&coef, period, method);
    let residual = rebuilt.iter().zip(values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(FhlDecomposition {
        period,
        positive: coef.iter().map(|c| c.max(0.0)).collect(),
        negative: coef.iter().map(|c| (-c).max(0.0)).collect(),
        residual,
    })
}

impl FhlDecomposition {
    /// `c_j = positive[j] - negative[j]`.
    pub fn signed(&self) -> Vec<f64> {
        self.positive.iter().zip(&self.negative).map(|(a, b)| a - b).collect()
    }

    pub fn is_levy_representable(&self) -> bool {
        self.negative.iter().all(|c| *c < REPRESENTABLE_TOL)
    }

    pub fn report(&self) -> FhlReport {
        FhlReport {
            period: self.period,
            positive: self.positive.clone(),
            negative: self.negative.clone(),
            residual: self.residual,
            levy_representable: self.is_levy_representable(),
        }
    }

    /// Value of `f_+` (or `f_-`) at a real point.
    pub fn side_value(&self, negative: bool, x: f64) -> f64 {
        let coef = if negative { &self.negative } else { &self.positive };
        let p = self.period as f64;
        coef.iter().enumerate().skip(1).map(|(j, c)| c * (1.0 - (TAU * j as f64 * x / p).cos())).sum()
    }

    /// Symmetric compound Poisson process with exponent `f_+` (or `f_-`):
    /// jumps `+-2 pi j / p` at rate `c_j / 2` each. `None` when the side is
    /// empty.
    pub fn side_spec(&self, negative: bool) -> Option<ProcessSpec> {
        let coef = if negative { &self.negative } else { &self.positive };
        let scale = self.positive.iter().chain(&self.negative).fold(1.0f64, |a, c| a.max(*c));
        let p = self.period as f64;
        let jumps: Vec<Jump> = coef
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| **c > 1e-12 * scale)
            .flat_map(|(j, c)| {
                let s = TAU * j as f64 / p;
                [Jump::scalar(s, c / 2.0), Jump::scalar(-s, c / 2.0)]
            })
            .collect();
        (!jumps.is_empty()).then_some(ProcessSpec::CompoundPoisson { jumps })
    }
}

/// The two towers estimating `f_+` and `f_-`. An empty side has no tower
/// and contributes 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FhlTowers {
    pub positive: Option<TowerSketch>,
    pub negative: Option<TowerSketch>,
}

/// Builds the tower pair; the two sides use independently derived seeds.
pub fn fhl_build(decomp: &FhlDecomposition, max_level: u32, m: usize, master_seed: MasterSeed) -> Result<FhlTowers> {
    let side = |negative: bool| -> Result<Option<TowerSketch>> {
        decomp
            .side_spec(negative)
            .map(|spec| {
                let seed = master_seed.derive(SIDE_TAG, negative as u64);
                TowerSketch::new(TowerConfig::new(spec, max_level, m, seed)?)
            })
            .transpose()
    };
    Ok(FhlTowers { positive: side(false)?, negative: side(true)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhlEstimate {
    pub estimate: Complex64,
    pub positive: Option<EstimateReport>,
    pub negative: Option<EstimateReport>,
    pub flags: EstimateFlags,
}

impl FhlTowers {
    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        for t in [&mut self.positive, &mut self.negative].into_iter().flatten() {
            t.update(v, y)?;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &FhlTowers) -> Result<()> {
        for (a, b) in [(&mut self.positive, &other.positive), (&mut self.negative, &other.negative)] {
            match (a, b) {
                (Some(a), Some(b)) => a.merge_from(b)?,
                (None, None) => {}
                _ => return Err(Error::ConfigMismatch),
            }
        }
        Ok(())
    }

    /// Difference of the two side estimates, with flags from both sides.
    pub fn estimate(&self) -> Result<FhlEstimate> {
        let positive = self.positive.as_ref().map(TowerSketch::estimate).transpose()?;
        let negative = self.negative.as_ref().map(TowerSketch::estimate).transpose()?;
        let value = |r: &Option<EstimateReport>| r.as_ref().map_or(Complex64::new(0.0, 0.0), |r| r.estimate);
        let flags = [&positive, &negative]
            .into_iter()
            .flatten()
            .fold(EstimateFlags::default(), |acc, r| acc.union(r.flags));
        Ok(FhlEstimate { estimate: value(&positive) - value(&negative), positive, negative, flags })
    }
}

/// `f_+` and `f_-` combined with [`FhlTowers::estimate`].
pub fn fhl_estimate(towers: &FhlTowers) -> Result<FhlEstimate> {
    towers.estimate()
}
