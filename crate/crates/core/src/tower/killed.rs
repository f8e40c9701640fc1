//! Insertion-only tower over a pure killed process: a dead bit per cell,
//! with `exp(i * infinity)` read as 0. Its moment is `c * ||x||_0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_shape, scan_levels, EstimateReport};
use crate::error::{Error, Result};
use crate::format::{self, KILLED_MAGIC};
use crate::processes::{kill_level, ProcessSpec};
use crate::randomness::{finish_digest, prefix_digest, purpose, DrawStream, MasterSeed};

/// How the cells of one repetition relate across levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// All levels read one process path, so dead cells form a prefix.
    Hll,
    /// Every level reads an independent copy of the process.
    Pcsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KilledTowerConfig {
    pub spec: ProcessSpec,
    pub max_level: u32,
    pub m: usize,
    pub master_seed: MasterSeed,
    pub coupling: Coupling,
}

impl KilledTowerConfig {
    pub fn new(rate: f64, max_level: u32, m: usize, master_seed: MasterSeed, coupling: Coupling) -> Result<Self> {
        let config = KilledTowerConfig { spec: ProcessSpec::PureKilled { rate }, max_level, m, master_seed, coupling };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.rate().is_none() {
            return Err(Error::InvalidConfig(format!(
                "killed tower needs a pure_killed spec, got {}",
                self.spec.name()
            )));
        }
        check_shape(self.max_level, self.m)
    }

    fn rate(&self) -> Option<f64> {
        match self.spec {
            ProcessSpec::PureKilled { rate } => Some(rate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KilledTowerSketch {
    config: KilledTowerConfig,
    rate: f64,
    /// Bit `k * m + j` is set when cell `(k, j)` is dead.
    dead: Vec<u64>,
}

impl KilledTowerSketch {
    pub fn new(config: KilledTowerConfig) -> Result<Self> {
        config.validate()?;
        let rate = config.rate().unwrap();
        let bits = (config.max_level as usize + 1) * config.m;
        Ok(KilledTowerSketch { config, rate, dead: vec![0; bits.div_ceil(64)] })
    }

    pub fn config(&self) -> &KilledTowerConfig {
        &self.config
    }

    #[inline]
    fn set(&mut self, k: usize, j: usize) {
        let i = k * self.config.m + j;
        self.dead[i / 64] |= 1 << (i % 64);
    }

    pub fn is_dead(&self, k: u32, j: usize) -> bool {
        let i = k as usize * self.config.m + j;
        self.dead[i / 64] >> (i % 64) & 1 == 1
    }

    /// Inserts `y > 0` at index `v`. Any positive amount kills the same
    /// cells; zero is a no-op and decrements are rejected.
    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        if y.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: y.len() });
        }
        let y = y[0];
        if !y.is_finite() {
            return Err(Error::NonFinite);
        }
        if y < 0.0 {
            return Err(Error::DecrementRejected);
        }
        if y == 0.0 {
            return Ok(());
        }
        let levels = self.config.max_level;
        let seed = self.config.master_seed;
        for j in 0..self.config.m {
            let prefix = prefix_digest(seed, v, j as u32);
            match self.config.coupling {
                Coupling::Hll => {
                    if let Some(top) = kill_level(prefix, self.rate, levels) {
                        for k in 0..=top as usize {
                            self.set(k, j);
                        }
                    }
                }
                Coupling::Pcsa => {
                    for k in pcsa_dead_levels(prefix, self.rate, levels) {
                        self.set(k as usize, j);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &KilledTowerSketch) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        for (a, b) in self.dead.iter_mut().zip(&other.dead) {
            *a |= b;
        }
        Ok(())
    }

    pub fn merge(&self, other: &KilledTowerSketch) -> Result<KilledTowerSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Fraction of live cells per level.
    pub fn level_means(&self) -> Vec<Complex64> {
        let m = self.config.m;
        (0..=self.config.max_level)
            .map(|k| {
                let alive = (0..m).filter(|&j| !self.is_dead(k, j)).count();
                Complex64::new(alive as f64 / m as f64, 0.0)
            })
            .collect()
    }

    pub fn estimate(&self) -> Result<EstimateReport> {
        scan_levels(self.level_means())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let bits = (self.config.max_level as usize + 1) * self.config.m;
        let bytes: Vec<u8> = self.dead.iter().flat_map(|w| w.to_le_bytes()).take(bits.div_ceil(8)).collect();
        format::encode(KILLED_MAGIC, &self.config, &bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (config, payload): (KilledTowerConfig, _) = format::decode(bytes, KILLED_MAGIC)?;
        let mut sketch = KilledTowerSketch::new(config).map_err(|e| Error::Format(e.to_string()))?;
        let bits = (sketch.config.max_level as usize + 1) * sketch.config.m;
        if payload.len() != bits.div_ceil(8) {
            return Err(Error::Format(format!("payload has {} bytes, expected {}", payload.len(), bits.div_ceil(8))));
        }
        if !bits.is_multiple_of(8) && payload[payload.len() - 1] >> (bits % 8) != 0 {
            return Err(Error::Format("padding bits are set".into()));
        }
        for (i, chunk) in payload.chunks(8).enumerate() {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            sketch.dead[i] = u64::from_le_bytes(word);
        }
        Ok(sketch)
    }
}

/// Levels at which independent per-level copies are dead by time `2^-k`.
///
/// Level `k` dies with probability `1 - exp(-c 2^-k)`, independently. The
/// dead levels are generated in increasing order by inverting the
/// cumulative hazard `c * sum_{i=s}^{l} 2^-i` against unit exponentials, so
/// the cost is proportional to the number of dead levels.
fn pcsa_dead_levels(prefix: u64, rate: f64, levels: u32) -> impl Iterator<Item = u32> {
    let digest = finish_digest(prefix, 0, purpose::KILL_TIME);
    let mut start = 0u32;
    let mut ctr = 0u64;
    std::iter::from_fn(move || {
        if start > levels {
            return None;
        }
        let e = DrawStream::from_digest(digest, ctr).next_exp1();
        ctr += 1;
        // smallest l >= start with c (2^{1-start} - 2^{-l}) >= e
        let rest = (1.0 - start as f64).exp2() - e / rate;
        if rest <= 0.0 {
            return None;
        }
        let mut l = (-rest.log2()).ceil().max(start as f64) as u32;
        while l > start && (-((l - 1) as f64)).exp2() <= rest {
            l -= 1;
        }
        while (-(l as f64)).exp2() > rest {
            l += 1;
        }
        if l > levels {
            return None;
        }
        start = l + 1;
        Some(l)
    })
}
