//! The stable-projection sketch: `m` real registers holding unit-time
//! projections, read with a median estimator.

mod median;

pub use median::{median_constant, stable_cdf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, STABLE_MAGIC};
use crate::oracle::stats;
use crate::processes::{dot, PreparedProcess, ProcessSpec};
use crate::randomness::{finish_digest, prefix_digest, purpose, MasterSeed};

pub const MIN_REPETITIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableConfig {
    /// One of stable1d, stable_spectral, gaussian, subordinated_lpq.
    pub spec: ProcessSpec,
    pub d: usize,
    pub m: usize,
    pub master_seed: MasterSeed,
}

impl StableConfig {
    pub fn new(spec: ProcessSpec, m: usize, master_seed: MasterSeed) -> Result<Self> {
        let d = spec.validate()?;
        let config = StableConfig { spec, d, m, master_seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.spec.validate()?;
        if d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: d });
        }
        if !self.spec.unit_time_samplable() {
            return Err(Error::InvalidConfig(format!(
                "{} is not strictly stable; use a tower sketch",
                self.spec.name()
            )));
        }
        if self.m < MIN_REPETITIONS || self.m > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("m must lie in [{MIN_REPETITIONS}, 2^32), got {}", self.m)));
        }
        Ok(())
    }

    /// Stability index of the registers: alpha, 2 for Gaussian, `p q` for
    /// subordinated processes.
    pub fn alpha_eff(&self) -> f64 {
        self.spec.alpha_eff().expect("validated")
    }
}

#[derive(Debug, Clone)]
pub struct StableSketch {
    config: StableConfig,
    process: PreparedProcess,
    registers: Vec<f64>,
}

impl PartialEq for StableSketch {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.registers == other.registers
    }
}

impl StableSketch {
    pub fn new(config: StableConfig) -> Result<Self> {
        config.validate()?;
        let process = PreparedProcess::new(&config.spec)?;
        let registers = vec![0.0; config.m];
        Ok(StableSketch { config, process, registers })
    }

    pub fn config(&self) -> &StableConfig {
        &self.config
    }

    pub fn registers(&self) -> &[f64] {
        &self.registers
    }

    /// `T_j += <y, X_1^{(v, j)}>`.
    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        let d = self.config.d;
        if y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: y.len() });
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let seed = self.config.master_seed;
        let mut x = vec![0.0; d];
        for (j, t) in self.registers.iter_mut().enumerate() {
            let digest = finish_digest(prefix_digest(seed, v, j as u32), 0, purpose::UNIT_TIME);
            self.process.unit_time_into(digest, &mut x)?;
            *t += dot(y, &x);
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &StableSketch) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        for (a, b) in self.registers.iter_mut().zip(&other.registers) {
            *a += b;
        }
        Ok(())
    }

    pub fn merge(&self, other: &StableSketch) -> Result<StableSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// `(median_j |T_j| / M)^alpha_eff`, `M` the median of a unit draw.
    pub fn estimate(&self) -> Result<f64> {
        let mut abs: Vec<f64> = self.registers.iter().map(|t| t.abs()).collect();
        let med = stats::median(&mut abs);
        if med == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.config.alpha_eff();
        Ok((med / median_constant(alpha)?).powf(alpha))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(STABLE_MAGIC, &self.config, &format::f64s_to_bytes(&self.registers))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (config, payload): (StableConfig, _) = format::decode(bytes, STABLE_MAGIC)?;
        let mut sketch = StableSketch::new(config).map_err(|e| Error::Format(e.to_string()))?;
        let registers = format::bytes_to_f64s(payload, sketch.registers.len())?;
        if registers.iter().any(|r| !r.is_finite()) {
            return Err(Error::Format("non-finite register".into()));
        }
        sketch.registers = registers;
        Ok(sketch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::stats::ks_one_sample;

    fn cfg(spec: ProcessSpec, m: usize) -> StableConfig {
        StableConfig::new(spec, m, MasterSeed::from(17u64)).unwrap()
    }

    #[test]
    fn new_sketch_estimates_zero_and_round_trips() {
        let s = StableSketch::new(cfg(ProcessSpec::Stable1D { alpha: 1.0 }, 32)).unwrap();
        assert!(s.registers().iter().all(|r| *r == 0.0));
        assert_eq!(s.estimate().unwrap(), 0.0);
        assert_eq!(StableSketch::from_bytes(&s.to_bytes()).unwrap(), s);
    }

    #[test]
    fn rejects_non_stable_specs_and_small_m() {
        assert!(StableConfig::new(ProcessSpec::ZpUniform { modulus: 4 }, 32, MasterSeed::from(1u64)).is_err());
        assert!(StableConfig::new(ProcessSpec::Stable1D { alpha: 1.0 }, 15, MasterSeed::from(1u64)).is_err());
    }

    #[test]
    fn cancellation() {
        let mut s = StableSketch::new(cfg(ProcessSpec::Stable1D { alpha: 1.5 }, 64)).unwrap();
        s.update(1, &[2.0]).unwrap();
        let before = s.clone();
        s.update(9, &[0.7]).unwrap();
        s.update(9, &[-0.7]).unwrap();
        for (a, b) in s.registers().iter().zip(before.registers()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn single_update_gives_standard_cauchy_registers() {
        let mut s = StableSketch::new(cfg(ProcessSpec::Stable1D { alpha: 1.0 }, 100_000)).unwrap();
        s.update(3, &[1.0]).unwrap();
        let mut xs = s.registers().to_vec();
        let r = ks_one_sample(&mut xs, |x| 0.5 + x.atan() / std::f64::consts::PI);
        assert!(r.passes(0.01), "{r:?}");
    }
}
