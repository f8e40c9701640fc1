//! A sketch of any of the file-backed kinds, dispatched on the file magic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{peek_magic, KILLED_MAGIC, STABLE_MAGIC, TOWER_MAGIC};
use crate::stable::StableSketch;
use crate::tower::{EstimateReport, KilledTowerSketch, TowerSketch};

#[derive(Debug, Clone, PartialEq)]
pub enum AnySketch {
    Tower(TowerSketch),
    Killed(KilledTowerSketch),
    Stable(StableSketch),
}

/// Estimate of any sketch kind; towers also carry their level report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchEstimate {
    pub estimate: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EstimateReport>,
}

impl AnySketch {
    pub fn kind(&self) -> &'static str {
        match self {
            AnySketch::Tower(_) => "tower",
            AnySketch::Killed(_) => "killed",
            AnySketch::Stable(_) => "stable",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnySketch::Tower(s) => s.config().d,
            AnySketch::Killed(_) => 1,
            AnySketch::Stable(s) => s.config().d,
        }
    }

    pub fn update(&mut self, v: u64, y: &[f64]) -> Result<()> {
        match self {
            AnySketch::Tower(s) => s.update(v, y),
            AnySketch::Killed(s) => s.update(v, y),
            AnySketch::Stable(s) => s.update(v, y),
        }
    }

    pub fn merge(&self, other: &AnySketch) -> Result<AnySketch> {
        Ok(match (self, other) {
            (AnySketch::Tower(a), AnySketch::Tower(b)) => AnySketch::Tower(a.merge(b)?),
            (AnySketch::Killed(a), AnySketch::Killed(b)) => AnySketch::Killed(a.merge(b)?),
            (AnySketch::Stable(a), AnySketch::Stable(b)) => AnySketch::Stable(a.merge(b)?),
            _ => return Err(Error::ConfigMismatch),
        })
    }

    pub fn estimate(&self) -> Result<SketchEstimate> {
        Ok(match self {
            AnySketch::Tower(s) => {
                let r = s.estimate()?;
                SketchEstimate { estimate: r.estimate, report: Some(r) }
            }
            AnySketch::Killed(s) => {
                let r = s.estimate()?;
                SketchEstimate { estimate: r.estimate, report: Some(r) }
            }
            AnySketch::Stable(s) => SketchEstimate { estimate: Complex64::new(s.estimate()?, 0.0), report: None },
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AnySketch::Tower(s) => s.to_bytes(),
            AnySketch::Killed(s) => s.to_bytes(),
            AnySketch::Stable(s) => s.to_bytes(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match peek_magic(bytes)? {
            TOWER_MAGIC => TowerSketch::from_bytes(bytes).map(AnySketch::Tower),
            KILLED_MAGIC => KilledTowerSketch::from_bytes(bytes).map(AnySketch::Killed),
            STABLE_MAGIC => StableSketch::from_bytes(bytes).map(AnySketch::Stable),
            m => Err(Error::Format(format!("unknown magic {:?}", String::from_utf8_lossy(&m)))),
        }
    }
}
