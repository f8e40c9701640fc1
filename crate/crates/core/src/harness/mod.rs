//! Stream files, stream generation and the experiment runner.

pub mod experiment;
pub mod stream;

pub use experiment::{BuildConfig, ExperimentConfig, Report, SketchConfig, StreamSource, TrialRecord};
pub use stream::{gen_stream, Stream, StreamParams, Update, ValueDist};
