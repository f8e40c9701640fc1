use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::ProcessSpec;
use crate::error::{Error, Result};
use crate::randomness::mix64;

/// What a sketch estimates: one exponent for every index, or a palette
/// where each index picks its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Spec(ProcessSpec),
    Palette(Palette),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub specs: Vec<ProcessSpec>,
    pub assign: Assignment,
}

/// Rule mapping an index to a palette entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// `v mod len`; with two entries this is parity.
    Modulo,
    /// A fixed hash of `v`, independent of any seed.
    Hashed,
}

const PALETTE_SALT: u64 = 0x3C6E_F372_FE94_F82B;

impl Target {
    pub fn specs(&self) -> &[ProcessSpec] {
        match self {
            Target::Spec(s) => std::slice::from_ref(s),
            Target::Palette(p) => &p.specs,
        }
    }

    /// Validates every entry and returns the common dimension.
    pub fn validate(&self) -> Result<usize> {
        let specs = self.specs();
        let first = specs.first().ok_or_else(|| Error::InvalidConfig("palette is empty".into()))?;
        let d = first.validate()?;
        for s in &specs[1..] {
            let e = s.validate()?;
            if e != d {
                return Err(Error::DimensionMismatch { expected: d, got: e });
            }
        }
        Ok(d)
    }

    /// Palette slot used by index `v`.
    #[inline]
    pub fn slot(&self, v: u64) -> usize {
        match self {
            Target::Spec(_) => 0,
            Target::Palette(p) => {
                let n = p.specs.len() as u64;
                match p.assign {
                    Assignment::Modulo => (v % n) as usize,
                    Assignment::Hashed => (mix64(v ^ PALETTE_SALT) % n) as usize,
                }
            }
        }
    }

    pub fn spec_for(&self, v: u64) -> &ProcessSpec {
        &self.specs()[self.slot(v)]
    }

    /// `f_v(z)` for the exponent assigned to `v`.
    pub fn exponent(&self, v: u64, z: &[f64]) -> Result<Complex64> {
        self.spec_for(v).char_exponent(z)
    }
}

impl From<ProcessSpec> for Target {
    fn from(s: ProcessSpec) -> Self {
        Target::Spec(s)
    }
}
