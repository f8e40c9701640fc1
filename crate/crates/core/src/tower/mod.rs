//! The phase-register tower sketch and its level-scan estimator.
//!
//! Register `S_k^{(j)}` accumulates `<y, X_{2^-k}>` modulo `2 pi` for the
//! path sampled for `(v, j)`. Its mean phase satisfies
//! `E exp(i S_k) = exp(-2^-k f(x))`, so reading the shallowest level where
//! the mean has moved away from 1 gives `f(x)` with bounded relative error.

mod killed;
mod phase;

pub use killed::{Coupling, KilledTowerConfig, KilledTowerSketch};
pub use phase::{circular_distance, reduce_phase, wrap_add};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, TOWER_MAGIC};
use crate::processes::{dot, PreparedProcess, Target, MAX_LEVEL};
use crate::randomness::{prefix_digest, MasterSeed};

/// Scan threshold on `|1 - Y_k|`.
pub const TRIGGER: f64 = 0.2;

/// Upper bound on `(K + 1) * m`.
pub const MAX_REGISTERS: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub target: Target,
    pub d: usize,
    /// Deepest level `K`; levels `0..=K` are stored.
    pub max_level: u32,
    /// Repetitions per level.
    pub m: usize,
    pub master_seed: MasterSeed,
}

/// `ceil(log2 n) + 4`.
pub fn default_max_level(n: u64) -> u32 {
    (64 - n.max(1).saturating_sub(1).leading_zeros()) + 4
}

impl TowerConfig {
    pub fn new(target: impl Into<Target>, max_level: u32, m: usize, master_seed: MasterSeed) -> Result<Self> {
        let target = target.into();
        let d = target.validate()?;
        let config = TowerConfig { target, d, max_level, m, master_seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.target.validate()?;
        if d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: d });
        }
        if self.target.specs().iter().any(|s| matches!(s, crate::ProcessSpec::PureKilled { .. })) {
            return Err(Error::InvalidConfig("killed processes use the killed tower sketch".into()));
        }
        check_shape(self.max_level, self.m)
    }
}

pub(crate) fn check_shape(max_level: u32, m: usize) -> Result<()> {
    if max_level > MAX_LEVEL {
        return Err(Error::InvalidConfig(format!("max_level {max_level} exceeds {MAX_LEVEL}")));
    }
    if m == 0 || m > u32::MAX as usize {
        return Err(Error::InvalidConfig(format!("m must lie in [1, 2^32), got {m}")));
    }
    if (max_level as usize + 1).saturating_mul(m) > MAX_REGISTERS {
        return Err(Error::InvalidConfig("sketch has too many registers".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateFlags {
    /// No level moved far enough from 1; the moment is below resolution.
    pub no_level_triggered: bool,
    /// The deepest level already triggered; the moment may exceed `2^K`.
    pub moment_too_large: bool,
}

impl EstimateFlags {
    pub fn union(self, other: EstimateFlags) -> EstimateFlags {
        EstimateFlags {
            no_level_triggered: self.no_level_triggered || other.no_level_triggered,
            moment_too_large: self.moment_too_large || other.moment_too_large,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: Complex64,
    pub chosen_level: Option<u32>,
    /// `Y_k` for `k = 0..=K`.
    pub per_level_y: Vec<Complex64>,
    pub flags: EstimateFlags,
}

/// Scans `Y_K, ..., Y_0` and inverts the first one with `|1 - Y_k| > 0.2`.
pub(crate) fn scan_levels(per_level_y: Vec<Complex64>) -> Result<EstimateReport> {
    let top = per_level_y.len() - 1;
    let mut flags = EstimateFlags::default();
    let chosen = (0..=top).rev().find(|&k| (Complex64::new(1.0, 0.0) - per_level_y[k]).norm() > TRIGGER);
    let level = match chosen {
        Some(k) => {
            flags.moment_too_large = k == top;
            k
        }
        None => {
            flags.no_level_triggered = true;
            0
        }
    };
    let y = per_level_y[level];
    if y.norm() == 0.0 || (y.im == 0.0 && y.re < 0.0) {
        return Err(Error::EstimationFailure(format!("Y at level {level} is {y}, on the logarithm's branch cut")));
    }
    // Adding zero normalizes -0 from ln(1).
    let estimate = -(level as f64).exp2() * y.ln() + Complex64::new(0.0, 0.0);
    Ok(EstimateReport { estimate, chosen_level: chosen.map(|k| k as u32), per_level_y, flags })
}

/// The `(f, m)` tower: `(K + 1) x m` phase registers in `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct TowerSketch {
    config: TowerConfig,
    processes: Vec<PreparedProcess>,
    /// k-major: register `(k, j)` sits at `k * m + j`.
    registers: Vec<f64>,
}

impl PartialEq for TowerSketch {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.registers == other.registers
    }
}

impl TowerSketch {
    pub fn new(config: TowerConfig) -> Result<Self> {
        config.validate()?;
        let processes = config.target.specs().iter().map(PreparedProcess::new).collect::<Result<_>>()?;
        let registers = vec![0.0; (config.max_level as usize + 1) * config.m];
        Ok(TowerSketch { config, processes, registers })
    }

    pub fn config(&self) -> &TowerConfig {
        &self.config
    }

    pub fn registers(&self) -> &[f64] {
        &self.registers
    }

    /// Registers of level `k`, one per repetition.
    pub fn level(&self, k: u32) -> &[f64] {
        let m = self.config.m;
        &self.registers[k as usize * m..(k as usize + 1) * m]
    }

    /// Adds `<y, X_{2^-k}^{(v, j)}>` to every register.
    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        let d = self.config.d;
        if y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: y.len() });
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if y.iter().all(|x| *x == 0.0) {
            return Ok(());
        }
        let process = &self.processes[self.config.target.slot(v)];
        let m = self.config.m;
        let levels = self.config.max_level;
        let seed = self.config.master_seed;
        let mut path = vec![0.0; (levels as usize + 1) * d];
        for j in 0..m {
            let prefix = prefix_digest(seed, v, j as u32);
            let depth = process.path_into(prefix, levels, &mut path);
            if d == 1 {
                let y0 = y[0];
                for (k, x) in path[..depth].iter().enumerate() {
                    let r = &mut self.registers[k * m + j];
                    *r = wrap_add(*r, reduce_phase(y0 * x));
                }
            } else {
                for k in 0..depth {
                    let r = &mut self.registers[k * m + j];
                    *r = wrap_add(*r, reduce_phase(dot(y, &path[k * d..(k + 1) * d])));
                }
            }
        }
        Ok(())
    }

    /// Adds another sketch's registers into this one.
    pub fn merge_from(&mut self, other: &TowerSketch) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        for (a, b) in self.registers.iter_mut().zip(&other.registers) {
            *a = wrap_add(*a, *b);
        }
        Ok(())
    }

    pub fn merge(&self, other: &TowerSketch) -> Result<TowerSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// `Y_k = mean_j exp(i S_k^{(j)})` for every level.
    pub fn level_means(&self) -> Vec<Complex64> {
        let m = self.config.m as f64;
        self.registers
            .chunks_exact(self.config.m)
            .map(|level| {
                let (mut c, mut s) = (0.0, 0.0);
                for &r in level {
                    let (sn, cs) = r.sin_cos();
                    c += cs;
                    s += sn;
                }
                Complex64::new(c / m, s / m)
            })
            .collect()
    }

    pub fn estimate(&self) -> Result<EstimateReport> {
        scan_levels(self.level_means())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(TOWER_MAGIC, &self.config, &format::f64s_to_bytes(&self.registers))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (config, payload): (TowerConfig, _) = format::decode(bytes, TOWER_MAGIC)?;
        let mut sketch = TowerSketch::new(config).map_err(|e| Error::Format(e.to_string()))?;
        let registers = format::bytes_to_f64s(payload, sketch.registers.len())?;
        if registers.iter().any(|r| !(0.0..std::f64::consts::TAU).contains(r)) {
            return Err(Error::Format("register outside [0, 2 pi)".into()));
        }
        sketch.registers = registers;
        Ok(sketch)
    }
}
