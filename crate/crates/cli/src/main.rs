use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_sketch::fhl::fhl_decompose;
use levy_sketch::harness::{gen_stream, BuildConfig, ExperimentConfig, Stream, StreamParams, ValueDist};
use levy_sketch::{AnySketch, Error, MasterSeed, SketchEstimate};

#[derive(Parser)]
#[command(name = "levy", version, about = "Lévy-process sketches for f-moments of turnstile streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, merge and query sketch files.
    #[command(subcommand)]
    Sketch(SketchCommand),
    /// Exact moment of a stream under a build config.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Fhl(FhlCommand),
    /// Write a random turnstile stream.
    GenStream {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long)]
        updates: u64,
        #[arg(long)]
        seed: MasterSeed,
        /// Largest absolute integer update value.
        #[arg(long, default_value_t = 5)]
        max_value: u32,
        /// Fraction of updates spent on insert-then-delete pairs.
        #[arg(long, default_value_t = 0.0)]
        delete_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Subcommand)]
enum SketchCommand {
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Merge {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Estimate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum FhlCommand {
    /// Split a symmetric function on Z_p into two characteristic exponents.
    Decompose {
        /// JSON array of f(0), ..., f(p-1), or an object with a `values` array.
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        period: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Per-trial CSV; the summary goes to the config's `report` path or
        /// next to the CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

const CONFIG_ERROR: u8 = 2;
const FORMAT_ERROR: u8 = 3;
const ESTIMATION_ERROR: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Format(_) | Error::ConfigHashMismatch { .. } | Error::Io(_) => FORMAT_ERROR,
        Error::EstimationFailure(_) => ESTIMATION_ERROR,
        _ => CONFIG_ERROR,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: code_for(&e), message: e.to_string() }
    }
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T> Context<T> for levy_sketch::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", what(), f.message);
            f
        })
    }
}

fn config_failure(path: &Path, message: impl std::fmt::Display) -> Failure {
    Failure { code: CONFIG_ERROR, message: format!("{}: {message}", path.display()) }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| config_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| config_failure(path, e))
}

fn read_stream(path: &Path) -> Result<Stream, Failure> {
    Stream::read_path(path).context(|| path.display().to_string())
}

fn read_sketch(path: &Path) -> Result<AnySketch, Failure> {
    let bytes = fs::read(path).map_err(Error::from).context(|| path.display().to_string())?;
    AnySketch::from_bytes(&bytes).context(|| path.display().to_string())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(Error::from).context(|| path.display().to_string())
}

fn complex(z: num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{} {} {}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
    }
}

fn describe_estimate(kind: &str, e: &SketchEstimate) -> String {
    let mut out = String::new();
    writeln!(out, "kind: {kind}").unwrap();
    writeln!(out, "estimate: {}", complex(e.estimate)).unwrap();
    if let Some(r) = &e.report {
        match r.chosen_level {
            Some(k) => writeln!(out, "chosen_level: {k}").unwrap(),
            None => writeln!(out, "chosen_level: none").unwrap(),
        }
        let mut flags = Vec::new();
        if r.flags.no_level_triggered {
            flags.push("no_level_triggered");
        }
        if r.flags.moment_too_large {
            flags.push("moment_too_large");
        }
        writeln!(out, "flags: {}", if flags.is_empty() { "none".into() } else { flags.join(" ") }).unwrap();
        for (k, y) in r.per_level_y.iter().enumerate() {
            writeln!(out, "Y[{k}]: {}", complex(*y)).unwrap();
        }
    }
    out
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum FunctionFile {
    Values(Vec<f64>),
    Object { values: Vec<f64> },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sketch(SketchCommand::Build { config, stream, out }) => {
            let build: BuildConfig = read_json(&config)?;
            let stream = read_stream(&stream)?;
            let sketch = build.build_from(&stream).context(|| "build".into())?;
            write_file(&out, sketch.to_bytes())
        }
        Command::Sketch(SketchCommand::Merge { a, b, out }) => {
            let merged = read_sketch(&a)?.merge(&read_sketch(&b)?).context(|| "merge".into())?;
            write_file(&out, merged.to_bytes())
        }
        Command::Sketch(SketchCommand::Estimate { file, json }) => {
            let sketch = read_sketch(&file)?;
            let estimate = sketch.estimate().context(|| "estimate".into())?;
            if json {
                let doc = serde_json::json!({ "kind": sketch.kind(), "estimate": estimate.estimate, "report": estimate.report });
                println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            } else {
                print!("{}", describe_estimate(sketch.kind(), &estimate));
            }
            Ok(())
        }
        Command::Oracle { config, stream, json } => {
            let build: BuildConfig = read_json(&config)?;
            let stream = read_stream(&stream)?;
            let d = build.sketch.dim().context(|| config.display().to_string())?;
            let x = stream.frequencies(d).context(|| "stream".into())?;
            let exact = build.sketch.exact(&x).context(|| "oracle".into())?;
            if json {
                let doc = serde_json::json!({ "exact": exact, "support": x.support() });
                println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            } else {
                println!("exact: {}", complex(exact));
                println!("support: {}", x.support());
            }
            Ok(())
        }
        Command::Fhl(FhlCommand::Decompose { function, period, out }) => {
            let values = match read_json::<FunctionFile>(&function)? {
                FunctionFile::Values(v) | FunctionFile::Object { values: v } => v,
            };
            if values.len() != period {
                return Err(config_failure(
                    &function,
                    format!("expected {period} values for period {period}, found {}", values.len()),
                ));
            }
            let decomp = fhl_decompose(&values, period).context(|| function.display().to_string())?;
            let text = serde_json::to_string_pretty(&decomp.report()).expect("serializable");
            write_file(&out, text + "\n")
        }
        Command::GenStream { n, d, updates, seed, max_value, delete_fraction, out } => {
            let params = StreamParams { n, d, updates, values: ValueDist::Integer { max: max_value }, delete_fraction };
            let stream = gen_stream(&params, seed).context(|| "gen-stream".into())?;
            write_file(&out, stream.to_text())
        }
        Command::Experiment(ExperimentCommand::Run { config, out }) => {
            let experiment: ExperimentConfig = read_json(&config)?;
            let report = experiment.run().context(|| "experiment".into())?;
            write_file(&out, report.to_csv())?;
            let summary = experiment.report.clone().unwrap_or_else(|| out.with_extension("summary.json"));
            write_file(&summary, report.summary_json() + "\n")?;
            let a = &report.aggregate;
            println!(
                "trials: {}  median relative error: {:.4}  p95: {:.4}  failures: {}",
                a.trials, a.median_relative_error, a.p95_relative_error, a.flags.estimation_failures
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("levy: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
