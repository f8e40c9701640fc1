//! Multi-trial error measurement: build a sketch per trial, compare its
//! estimate with the exact moment of the same stream, and aggregate.

use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream::{gen_stream, Stream, StreamParams};
use crate::error::{Error, Result};
use crate::oracle::{exact_moment, SparseVector};
use crate::processes::{ProcessSpec, Target};
use crate::randomness::MasterSeed;
use crate::sketch::AnySketch;
use crate::stable::{StableConfig, StableSketch};
use crate::tower::{default_max_level, Coupling, KilledTowerConfig, KilledTowerSketch, TowerConfig, TowerSketch};

const SKETCH_SEED_TAG: u64 = 0x736b_6574_6368;
const STREAM_SEED_TAG: u64 = 0x7374_7265_616d;

/// Sketch kind and shape, without its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sketch", rename_all = "snake_case")]
pub enum SketchConfig {
    Tower {
        #[serde(flatten)]
        target: Target,
        /// Deepest level; defaults to `ceil(log2 n) + 4` when `n` is given,
        /// else 24.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_level: Option<u32>,
        /// Universe size, only used for the default depth.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
        m: usize,
    },
    Stable {
        spec: ProcessSpec,
        m: usize,
    },
    Killed {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_level: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
        m: usize,
        coupling: Coupling,
    },
}

const FALLBACK_MAX_LEVEL: u32 = 24;

impl SketchConfig {
    pub fn build(&self, master_seed: MasterSeed) -> Result<AnySketch> {
        let depth = |k: Option<u32>, n: Option<u64>| k.unwrap_or_else(|| n.map_or(FALLBACK_MAX_LEVEL, default_max_level));
        Ok(match self {
            SketchConfig::Tower { target, max_level, n, m } => AnySketch::Tower(TowerSketch::new(TowerConfig::new(
                target.clone(),
                depth(*max_level, *n),
                *m,
                master_seed,
            )?)?),
            SketchConfig::Stable { spec, m } => {
                AnySketch::Stable(StableSketch::new(StableConfig::new(spec.clone(), *m, master_seed)?)?)
            }
            SketchConfig::Killed { rate, max_level, n, m, coupling } => AnySketch::Killed(KilledTowerSketch::new(
                KilledTowerConfig::new(*rate, depth(*max_level, *n), *m, master_seed, *coupling)?,
            )?),
        })
    }

    /// The quantity the sketch estimates, computed exactly.
    pub fn exact(&self, x: &SparseVector) -> Result<Complex64> {
        match self {
            SketchConfig::Tower { target, .. } => exact_moment(x, target),
            SketchConfig::Stable { spec, .. } => exact_moment(x, &Target::from(spec.clone())),
            SketchConfig::Killed { rate, .. } => exact_moment(x, &Target::from(ProcessSpec::PureKilled { rate: *rate })),
        }
    }

    /// True when every exponent involved is real and even, so estimates are
    /// judged by their real part.
    pub fn is_real(&self) -> bool {
        match self {
            SketchConfig::Tower { target, .. } => target.specs().iter().all(ProcessSpec::is_real_symmetric),
            SketchConfig::Stable { .. } | SketchConfig::Killed { .. } => true,
        }
    }

    pub fn dim(&self) -> Result<usize> {
        match self {
            SketchConfig::Tower { target, .. } => target.validate(),
            SketchConfig::Stable { spec, .. } => spec.validate(),
            SketchConfig::Killed { .. } => Ok(1),
        }
    }
}

/// Config file of `sketch build` and `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    #[serde(flatten)]
    pub sketch: SketchConfig,
    pub master_seed: MasterSeed,
}

impl BuildConfig {
    pub fn build_from(&self, stream: &Stream) -> Result<AnySketch> {
        let d = self.sketch.dim()?;
        stream.check_dim(d)?;
        let mut sketch = self.sketch.build(self.master_seed)?;
        for u in &stream.updates {
            sketch.update(u.index, &u.value)?;
        }
        Ok(sketch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamSource {
    /// One stream file shared by all trials.
    File { path: PathBuf },
    /// A generated stream; with no `seed`, each trial draws its own.
    Generate {
        #[serde(flatten)]
        params: StreamParams,
        #[serde(default)]
        seed: Option<MasterSeed>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sketch: SketchConfig,
    pub trials: u32,
    pub base_seed: MasterSeed,
    pub stream: StreamSource,
    /// Summary output; defaults to the CSV path with a `.summary.json` suffix.
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub sketch_seed: MasterSeed,
    pub stream_seed: Option<MasterSeed>,
    pub exact: Complex64,
    /// NaN when estimation failed.
    pub estimate: Complex64,
    pub chosen_level: Option<u32>,
    pub no_level_triggered: bool,
    pub moment_too_large: bool,
    /// `|estimate - exact| / |exact|`, or `|estimate|` for a zero moment.
    /// Real targets compare real parts only.
    pub relative_error: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub no_level_triggered: u32,
    pub moment_too_large: u32,
    pub estimation_failures: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: u32,
    pub median_relative_error: f64,
    pub p95_relative_error: f64,
    pub max_relative_error: f64,
    pub flags: FlagCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub aggregate: Aggregate,
    pub records: Vec<TrialRecord>,
    pub runtime_secs: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        let d = self.sketch.dim()?;
        if let StreamSource::Generate { params, .. } = &self.stream {
            params.validate()?;
            if params.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: params.d });
            }
        }
        self.sketch.build(self.base_seed).map(|_| ())
    }

    pub fn sketch_seed(&self, trial: u32) -> MasterSeed {
        self.base_seed.derive(SKETCH_SEED_TAG, trial as u64)
    }

    pub fn stream_seed(&self, trial: u32) -> Option<MasterSeed> {
        match &self.stream {
            StreamSource::Generate { seed: None, .. } => Some(self.base_seed.derive(STREAM_SEED_TAG, trial as u64)),
            StreamSource::Generate { seed: Some(s), .. } => Some(*s),
            StreamSource::File { .. } => None,
        }
    }

    /// Runs one trial. `shared` is the stream file, when the config names one.
    pub fn run_trial(&self, trial: u32, shared: Option<&Stream>) -> Result<TrialRecord> {
        let owned;
        let stream = match (&self.stream, shared) {
            (StreamSource::Generate { params, .. }, _) => {
                owned = gen_stream(params, self.stream_seed(trial).expect("generated"))?;
                &owned
            }
            (StreamSource::File { .. }, Some(s)) => s,
            (StreamSource::File { path }, None) => {
                owned = Stream::read_path(path)?;
                &owned
            }
        };
        let config = BuildConfig { sketch: self.sketch.clone(), master_seed: self.sketch_seed(trial) };
        let sketch = config.build_from(stream)?;
        let exact = self.sketch.exact(&stream.frequencies(self.sketch.dim()?)?)?;
        let mut record = TrialRecord {
            trial,
            sketch_seed: config.master_seed,
            stream_seed: self.stream_seed(trial),
            exact,
            estimate: Complex64::new(f64::NAN, f64::NAN),
            chosen_level: None,
            no_level_triggered: false,
            moment_too_large: false,
            relative_error: f64::INFINITY,
            error: None,
        };
        match sketch.estimate() {
            Ok(e) => {
                record.estimate = e.estimate;
                if let Some(r) = e.report {
                    record.chosen_level = r.chosen_level;
                    record.no_level_triggered = r.flags.no_level_triggered;
                    record.moment_too_large = r.flags.moment_too_large;
                }
                let estimate = if self.sketch.is_real() { Complex64::new(e.estimate.re, 0.0) } else { e.estimate };
                record.relative_error = relative_error(estimate, exact);
            }
            Err(Error::EstimationFailure(msg)) => record.error = Some(msg),
            Err(e) => return Err(e),
        }
        Ok(record)
    }

    /// Runs every trial in parallel; records come back in trial order.
    pub fn run(&self) -> Result<Report> {
        self.validate()?;
        let start = Instant::now();
        let shared = match &self.stream {
            StreamSource::File { path } => Some(Stream::read_path(path)?),
            StreamSource::Generate { .. } => None,
        };
        let records = (0..self.trials)
            .into_par_iter()
            .map(|t| self.run_trial(t, shared.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Report {
            config: self.clone(),
            aggregate: aggregate(&records),
            records,
            runtime_secs: start.elapsed().as_secs_f64(),
        })
    }
}

pub fn relative_error(estimate: Complex64, exact: Complex64) -> f64 {
    let err = (estimate - exact).norm();
    if exact.norm() == 0.0 {
        err
    } else {
        err / exact.norm()
    }
}

pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let mut errs: Vec<f64> = records.iter().map(|r| r.relative_error).collect();
    let (median, p95, max) = if errs.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let max = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (crate::oracle::stats::median(&mut errs), crate::oracle::stats::quantile(&mut errs, 0.95), max)
    };
    let count = |p: fn(&TrialRecord) -> bool| records.iter().filter(|r| p(r)).count() as u32;
    Aggregate {
        trials: records.len() as u32,
        median_relative_error: median,
        p95_relative_error: p95,
        max_relative_error: max,
        flags: FlagCounts {
            no_level_triggered: count(|r| r.no_level_triggered),
            moment_too_large: count(|r| r.moment_too_large),
            estimation_failures: count(|r| r.error.is_some()),
        },
    }
}

const CSV_HEADER: &str = "trial,sketch_seed,stream_seed,exact_re,exact_im,estimate_re,estimate_im,chosen_level,\
no_level_triggered,moment_too_large,relative_error,error";

impl Report {
    /// One row per trial; byte-identical for identical configs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let seed = r.stream_seed.map(|s| s.to_string()).unwrap_or_default();
            let level = r.chosen_level.map(|k| k.to_string()).unwrap_or_default();
            let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{},{},{},{:e},{}\n",
                r.trial,
                r.sketch_seed,
                seed,
                r.exact.re,
                r.exact.im,
                r.estimate.re,
                r.estimate.im,
                level,
                r.no_level_triggered,
                r.moment_too_large,
                r.relative_error,
                error
            ));
        }
        out
    }

    /// Config, aggregate and runtime as pretty JSON; only `runtime_secs`
    /// varies between identical runs.
    pub fn summary_json(&self) -> String {
        let summary = serde_json::json!({
            "config": self.config,
            "aggregate": self.aggregate,
            "runtime_secs": self.runtime_secs,
        });
        serde_json::to_string_pretty(&summary).expect("serializable")
    }
}
