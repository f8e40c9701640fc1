//! Stream files: one update `v y_1 ... y_d` per line, `#` comments.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::SparseVector;
use crate::randomness::{purpose, DrawStream, MasterSeed, OracleKey};

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub index: u64,
    pub value: Vec<f64>,
}

/// An in-memory update stream of constant dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stream {
    /// Value dimension; 0 for an empty stream.
    pub d: usize,
    pub updates: Vec<Update>,
}

impl Stream {
    pub fn new(d: usize) -> Self {
        Stream { d, updates: Vec::new() }
    }

    pub fn push(&mut self, index: u64, value: Vec<f64>) {
        debug_assert_eq!(value.len(), self.d);
        self.updates.push(Update { index, value });
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    /// Checks that the stream can feed a sketch of dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if !self.is_empty() && self.d != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.d });
        }
        Ok(())
    }

    pub fn concat(&self, other: &Stream) -> Result<Stream> {
        if !self.is_empty() && !other.is_empty() && self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        let d = if self.is_empty() { other.d } else { self.d };
        let mut updates = self.updates.clone();
        updates.extend(other.updates.iter().cloned());
        Ok(Stream { d, updates })
    }

    /// Exact frequency vector.
    pub fn frequencies(&self, d: usize) -> Result<SparseVector> {
        self.check_dim(d)?;
        let mut x = SparseVector::new(d);
        for u in &self.updates {
            x.update(u.index, &u.value)?;
        }
        Ok(x)
    }

    pub fn read(reader: impl BufRead) -> Result<Stream> {
        let mut stream = Stream::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Format(format!("stream line {}: {what}", lineno + 1));
            let mut fields = line.split_whitespace();
            let index: u64 = fields.next().unwrap().parse().map_err(|_| bad("index is not an unsigned integer"))?;
            let value = fields
                .map(|f| f.parse::<f64>().map_err(|_| bad("value is not a number")))
                .collect::<Result<Vec<f64>>>()?;
            if value.is_empty() {
                return Err(bad("missing value"));
            }
            if value.iter().any(|x| !x.is_finite()) {
                return Err(bad("value is not finite"));
            }
            if stream.is_empty() {
                stream.d = value.len();
            } else if value.len() != stream.d {
                return Err(bad(&format!("expected {} values, found {}", stream.d, value.len())));
            }
            stream.updates.push(Update { index, value });
        }
        Ok(stream)
    }

    pub fn read_path(path: &std::path::Path) -> Result<Stream> {
        let file = std::fs::File::open(path)?;
        Stream::read(std::io::BufReader::new(file))
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        for u in &self.updates {
            write!(out, "{}", u.index)?;
            for y in &u.value {
                write!(out, " {y}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Law of generated update values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDist {
    /// Uniform integer in `[-max, max]` without 0.
    Integer { max: u32 },
    Uniform { low: f64, high: f64 },
    Gaussian { sigma: f64 },
}

impl Default for ValueDist {
    fn default() -> Self {
        ValueDist::Integer { max: 5 }
    }
}

/// Generator parameters.
///
/// Non-cancelling updates touch indices `0..n`; when `updates >= n` every
/// index receives at least one of them. A `delete_fraction` of the updates
/// are insert-then-delete pairs on fresh indices `n, n+1, ...`, so they
/// cancel exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamParams {
    pub n: u64,
    #[serde(default = "one")]
    pub d: usize,
    pub updates: u64,
    #[serde(default)]
    pub values: ValueDist,
    #[serde(default)]
    pub delete_fraction: f64,
}

fn one() -> usize {
    1
}

impl StreamParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 {
            return bad("stream dimension must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.delete_fraction) {
            return bad(format!("delete_fraction must lie in [0, 1], got {}", self.delete_fraction));
        }
        if self.n == 0 && self.updates > 0 && self.delete_fraction < 1.0 {
            return bad("n must be positive when the stream has non-cancelling updates".into());
        }
        match self.values {
            ValueDist::Integer { max: 0 } => bad("integer values need max >= 1".into()),
            ValueDist::Uniform { low, high } if !(low < high && low.is_finite() && high.is_finite()) => {
                bad(format!("uniform values need low < high, got [{low}, {high})"))
            }
            ValueDist::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                bad(format!("gaussian values need sigma > 0, got {sigma}"))
            }
            _ => Ok(()),
        }
    }
}

fn draw_value(dist: &ValueDist, s: &mut DrawStream) -> f64 {
    match *dist {
        ValueDist::Integer { max } => {
            let k = ((s.next_u64() as u128 * (2 * max as u128)) >> 64) as i64;
            let k = k - max as i64;
            (if k >= 0 { k + 1 } else { k }) as f64
        }
        ValueDist::Uniform { low, high } => low + (high - low) * s.next_f64(),
        ValueDist::Gaussian { sigma } => sigma * s.next_normal(),
    }
}

/// Deterministic stream for `(params, seed)`.
pub fn gen_stream(params: &StreamParams, seed: MasterSeed) -> Result<Stream> {
    params.validate()?;
    let pairs = ((params.updates as f64 * params.delete_fraction) / 2.0).floor() as u64;
    let plain = params.updates - 2 * pairs;
    let key = OracleKey::new(seed, 0, 0, 0, purpose::STREAM_GEN);
    let mut ctr = 0u64;
    let mut next = || {
        ctr += 1;
        key.stream(ctr)
    };
    // (sort key, update)
    let mut ops: Vec<(u64, Update)> = Vec::with_capacity(params.updates as usize);
    for i in 0..plain {
        let mut s = next();
        let index = if i < params.n && plain >= params.n { i } else { s.next_u64() % params.n };
        let value = (0..params.d).map(|_| draw_value(&params.values, &mut s)).collect();
        ops.push((s.next_u64(), Update { index, value }));
    }
    for p in 0..pairs {
        let mut s = next();
        let index = params.n + p;
        let value: Vec<f64> = (0..params.d).map(|_| draw_value(&params.values, &mut s)).collect();
        let (a, b) = (s.next_u64(), s.next_u64());
        let neg = value.iter().map(|x| -x).collect();
        ops.push((a.min(b), Update { index, value }));
        ops.push((a.max(b).max(a.min(b) + 1), Update { index, value: neg }));
    }
    ops.sort_by_key(|(k, _)| *k);
    Ok(Stream { d: params.d, updates: ops.into_iter().map(|(_, u)| u).collect() })
}
