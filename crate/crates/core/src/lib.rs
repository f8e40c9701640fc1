//! Streaming sketches built from Lévy processes.
//!
//! A sketch keeps, for every repetition `j`, the projection of the stream's
//! frequency vector onto one sampled process path per index. The
//! characteristic function of that projection is `exp(-t sum_v f(x(v)))`, so
//! averaging phases recovers the f-moment for any characteristic exponent
//! `f`.

pub mod error;
pub mod fhl;
mod format;
mod sketch;
pub mod harness;
pub mod oracle;
pub mod processes;
pub mod randomness;
pub mod stable;
pub mod tower;

pub use error::{Error, Result};
pub use format::FORMAT_VERSION;
pub use sketch::{AnySketch, SketchEstimate};
pub use processes::{ProcessSpec, Target};
pub use randomness::{MasterSeed, OracleKey};
pub use stable::{StableConfig, StableSketch};
pub use tower::{EstimateReport, KilledTowerSketch, TowerConfig, TowerSketch};
