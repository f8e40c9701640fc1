//! Path sampling.
//!
//! Compound Poisson families are simulated by their jump times on `(0, 1]`:
//! a jump whose time `U` satisfies `U <= 2^-L` belongs to every level
//! `k <= L`. The depth `L` of a jump is the number of leading zeros of a
//! uniform word, so each level sees a Poisson number of jumps with mean
//! `rate * 2^-k` and the increments between levels are independent.
//!
//! Gaussian paths are built top-down with Brownian bridges from `X_1`;
//! stable and subordinated paths are built bottom-up from the base value
//! at `t = 2^-K`.

use std::f64::consts::TAU;

use super::exponent::{dot, GNP_STREAMING_RATE};
use super::gnp::{gnp_rate, read_tapes};
use super::spec::{cholesky, Covariance, ProcessSpec};
use crate::error::{Error, Result};
use crate::randomness::{finish_digest, prefix_digest, purpose, DrawStream, OracleKey};

/// Deepest level a path may carry.
pub const MAX_LEVEL: u32 = 62;

/// Values of one process path at `t = 2^-k`, `k = 0..=levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPath {
    levels: u32,
    dim: usize,
    values: Vec<f64>,
    killed_through: Option<u32>,
}

impl DyadicPath {
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `X_{2^-k}`. Dead levels of a killed path report zeros; check
    /// [`DyadicPath::is_dead`] first.
    pub fn value(&self, k: u32) -> &[f64] {
        let k = k as usize;
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Whether the path sits in the cemetery state at `t = 2^-k`.
    pub fn is_dead(&self, k: u32) -> bool {
        self.killed_through.is_some_and(|t| k <= t)
    }

    pub fn killed_through(&self) -> Option<u32> {
        self.killed_through
    }
}

/// Walker/Vose alias table.
#[derive(Debug, Clone)]
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        AliasTable { prob, alias }
    }

    #[inline]
    fn sample(&self, stream: &mut DrawStream) -> usize {
        let n = self.prob.len();
        let i = ((stream.next_u64() as u128 * n as u128) >> 64) as usize;
        if stream.next_f64() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

#[derive(Debug, Clone)]
enum JumpLaw {
    Table { alias: AliasTable, values: Vec<f64> },
    Zp { modulus: u64 },
    GnpFinite { alias: AliasTable, w: u32 },
    GnpStreaming { cap: u32 },
}

#[derive(Debug, Clone)]
enum Kind {
    Drift { gamma: Vec<f64> },
    Gaussian { chol: Vec<f64> },
    Stable { alpha: f64 },
    Spectral { alpha: f64, atoms: Vec<(f64, Vec<f64>)> },
    Jumps { rate: f64, exp_neg_rate: f64, law: JumpLaw },
    Lpq { p: f64, q: f64 },
    Killed { rate: f64 },
}

/// A validated spec with its sampling tables precomputed.
#[derive(Debug, Clone)]
pub struct PreparedProcess {
    spec: ProcessSpec,
    dim: usize,
    kind: Kind,
    /// `scale[k] = 2^{-k/index}` for the self-similar families; bridge
    /// increment sds for the Gaussian.
    scale: Vec<f64>,
    /// Secondary scale table (`2^{-k/q}` for the subordinator).
    sub_scale: Vec<f64>,
}

fn level_scales(index: f64) -> Vec<f64> {
    (0..=MAX_LEVEL + 1).map(|k| (-(k as f64) / index).exp2()).collect()
}

impl PreparedProcess {
    pub fn new(spec: &ProcessSpec) -> Result<Self> {
        let dim = spec.validate()?;
        let mut scale = Vec::new();
        let mut sub_scale = Vec::new();
        let kind = match spec {
            ProcessSpec::Drift { gamma } => Kind::Drift { gamma: gamma.clone() },
            ProcessSpec::Gaussian { covariance } => {
                // bridge increment sd at level k: 2^{-(k+1)/2}
                scale = (0..=MAX_LEVEL + 1).map(|k| (-((k + 1) as f64) / 2.0).exp2()).collect();
                Kind::Gaussian {
                    chol: match covariance {
                        Covariance::Scalar(s) => vec![s.sqrt()],
                        Covariance::Matrix(rows) => cholesky(rows)?,
                    },
                }
            }
            ProcessSpec::Stable1D { alpha } => {
                scale = level_scales(*alpha);
                Kind::Stable { alpha: *alpha }
            }
            ProcessSpec::StableSpectral { alpha, atoms } => {
                scale = level_scales(*alpha);
                Kind::Spectral {
                    alpha: *alpha,
                    atoms: atoms.iter().map(|a| (a.weight.powf(1.0 / alpha), a.direction.clone())).collect(),
                }
            }
            ProcessSpec::CompoundPoisson { jumps } => {
                let rates: Vec<f64> = jumps.iter().map(|j| j.rate).collect();
                let values = jumps.iter().flat_map(|j| j.value.iter().copied()).collect();
                jumps_kind(rates.iter().sum(), JumpLaw::Table { alias: AliasTable::new(&rates), values })
            }
            ProcessSpec::SubordinatedLpq { p, q, .. } => {
                sub_scale = level_scales(*q);
                Kind::Lpq { p: *p, q: *q }
            }
            ProcessSpec::PureKilled { rate } => Kind::Killed { rate: *rate },
            ProcessSpec::ZpUniform { modulus } => {
                jumps_kind((*modulus - 1) as f64 / *modulus as f64, JumpLaw::Zp { modulus: *modulus })
            }
            ProcessSpec::GnpFinite { w } => {
                let rates: Vec<f64> = (1..1u64 << w).map(|j| gnp_rate(*w, j)).collect();
                jumps_kind(rates.iter().sum(), JumpLaw::GnpFinite { alias: AliasTable::new(&rates), w: *w })
            }
            ProcessSpec::GnpStreaming { depth_cap } => {
                jumps_kind(GNP_STREAMING_RATE, JumpLaw::GnpStreaming { cap: *depth_cap })
            }
        };
        Ok(PreparedProcess { spec: spec.clone(), dim, kind, scale, sub_scale })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws `X_1` under `key`.
    pub fn sample_unit_time(&self, key: &OracleKey) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.unit_time_into(key.digest(), &mut out)?;
        Ok(out)
    }

    /// `X_1` from a finished key digest; one counter slot, several words.
    pub(crate) fn unit_time_into(&self, digest: u64, out: &mut [f64]) -> Result<()> {
        let mut s = DrawStream::from_digest(digest, 0);
        match &self.kind {
            Kind::Stable { alpha } => out[0] = s.next_sym_stable(*alpha),
            Kind::Gaussian { chol } => self.correlated_normals(chol, 1.0, &mut s, out),
            Kind::Spectral { alpha, atoms } => {
                out.fill(0.0);
                spectral_add(*alpha, atoms, 1.0, &mut s, out);
            }
            Kind::Lpq { p, q } => {
                let z = s.next_pos_stable(*q);
                let c = z.powf(1.0 / p);
                for o in out.iter_mut() {
                    *o = c * s.next_sym_stable(*p);
                }
            }
            _ => return Err(Error::UnsupportedVariant(self.spec.name())),
        }
        Ok(())
    }

    fn correlated_normals(&self, chol: &[f64], sd: f64, s: &mut DrawStream, out: &mut [f64]) {
        let d = self.dim;
        if d == 1 {
            out[0] = sd * chol[0] * s.next_normal();
            return;
        }
        let mut n = [0.0f64; 16];
        let mut big = Vec::new();
        let normals: &mut [f64] = if d <= 16 {
            &mut n[..d]
        } else {
            big.resize(d, 0.0);
            &mut big
        };
        for x in normals.iter_mut() {
            *x = s.next_normal();
        }
        for i in 0..d {
            out[i] = sd * dot(&chol[i * d..i * d + i + 1], &normals[..i + 1]);
        }
    }

    /// Samples the path under `key` for levels `0..=levels`. The key's
    /// level and purpose fields are ignored.
    pub fn sample_dyadic_path(&self, key: &OracleKey, levels: u32) -> Result<DyadicPath> {
        if levels > MAX_LEVEL {
            return Err(Error::OutOfRange(format!("path depth {levels} exceeds {MAX_LEVEL}")));
        }
        let prefix = prefix_digest(key.master_seed, key.index, key.rep);
        let mut values = vec![0.0; (levels as usize + 1) * self.dim];
        let mut killed_through = None;
        if let Kind::Killed { rate } = self.kind {
            killed_through = kill_level(prefix, rate, levels);
        } else {
            self.path_into(prefix, levels, &mut values);
        }
        Ok(DyadicPath { levels, dim: self.dim, values, killed_through })
    }

    /// Writes `X_{2^-k}` for `k = 0..=levels` into `out` (k-major, `dim`
    /// entries per level) and returns the number of leading levels that may
    /// be nonzero; later levels are left untouched and are zero.
    pub(crate) fn path_into(&self, prefix: u64, levels: u32, out: &mut [f64]) -> usize {
        let d = self.dim;
        let n = levels as usize + 1;
        match &self.kind {
            Kind::Drift { gamma } => {
                for k in 0..n {
                    let t = (-(k as f64)).exp2();
                    for (o, g) in out[k * d..(k + 1) * d].iter_mut().zip(gamma) {
                        *o = g * t;
                    }
                }
                n
            }
            Kind::Gaussian { chol } => {
                let mut s = DrawStream::from_digest(finish_digest(prefix, 0, purpose::PATH_BASE), 0);
                self.correlated_normals(chol, 1.0, &mut s, &mut out[..d]);
                let mut small = [0.0f64; 16];
                let mut big = Vec::new();
                let inc: &mut [f64] = if d <= 16 {
                    &mut small[..d]
                } else {
                    big.resize(d, 0.0);
                    &mut big
                };
                for k in 1..n {
                    // X_{t/2} = X_t / 2 + N(0, t/4), t = 2^{1-k}
                    let mut s =
                        DrawStream::from_digest(finish_digest(prefix, k as i32, purpose::PATH_INCREMENT), 0);
                    self.correlated_normals(chol, self.scale[k], &mut s, inc);
                    let (done, rest) = out.split_at_mut(k * d);
                    for i in 0..d {
                        rest[i] = 0.5 * done[(k - 1) * d + i] + inc[i];
                    }
                }
                n
            }
            Kind::Stable { alpha } => {
                let top = levels as usize;
                let mut s = DrawStream::from_digest(finish_digest(prefix, top as i32, purpose::PATH_BASE), 0);
                let mut x = self.scale[top] * s.next_sym_stable(*alpha);
                out[top] = x;
                for k in (0..top).rev() {
                    let mut s =
                        DrawStream::from_digest(finish_digest(prefix, k as i32, purpose::PATH_INCREMENT), 0);
                    x += self.scale[k + 1] * s.next_sym_stable(*alpha);
                    out[k] = x;
                }
                n
            }
            Kind::Spectral { alpha, atoms } => {
                let top = levels as usize;
                let mut s = DrawStream::from_digest(finish_digest(prefix, top as i32, purpose::PATH_BASE), 0);
                let cur = &mut out[top * d..(top + 1) * d];
                cur.fill(0.0);
                spectral_add(*alpha, atoms, self.scale[top], &mut s, cur);
                for k in (0..top).rev() {
                    let mut s =
                        DrawStream::from_digest(finish_digest(prefix, k as i32, purpose::PATH_INCREMENT), 0);
                    let (head, tail) = out.split_at_mut((k + 1) * d);
                    let cur = &mut head[k * d..];
                    cur.copy_from_slice(&tail[..d]);
                    spectral_add(*alpha, atoms, self.scale[k + 1], &mut s, cur);
                }
                n
            }
            Kind::Lpq { p, q } => {
                let top = levels as usize;
                for k in (0..=top).rev() {
                    // base at level `top` covers (0, 2^-top]; increments cover (2^-(k+1), 2^-k]
                    let (tag, width) =
                        if k == top { (purpose::PATH_BASE, top) } else { (purpose::PATH_INCREMENT, k + 1) };
                    let mut sub =
                        DrawStream::from_digest(finish_digest(prefix, k as i32, purpose::SUBORDINATOR), 0);
                    let dz = self.sub_scale[width] * sub.next_pos_stable(*q);
                    let c = dz.powf(1.0 / p);
                    let mut s = DrawStream::from_digest(finish_digest(prefix, k as i32, tag), 0);
                    for i in 0..d {
                        let prev = if k == top { 0.0 } else { out[(k + 1) * d + i] };
                        out[k * d + i] = prev + c * s.next_sym_stable(*p);
                    }
                }
                n
            }
            Kind::Jumps { rate, exp_neg_rate, law } => {
                let mut s = DrawStream::from_digest(finish_digest(prefix, 0, purpose::JUMP_COUNT), 0);
                let count = if *rate < 10.0 {
                    s.poisson_inversion(*rate, *exp_neg_rate)
                } else {
                    s.next_poisson(*rate)
                };
                if count == 0 {
                    return 0;
                }
                let jump_digest = finish_digest(prefix, 0, purpose::JUMP_VALUE);
                let mut depth = 0usize;
                let mut jump = [0.0f64; 16];
                let mut big = Vec::new();
                let jump: &mut [f64] = if d <= 16 {
                    &mut jump[..d]
                } else {
                    big.resize(d, 0.0);
                    &mut big
                };
                for i in 0..count {
                    let mut s = DrawStream::from_digest(jump_digest, i);
                    let deepest = (s.next_u64().leading_zeros() as usize).min(n - 1);
                    draw_jump(law, &mut s, jump);
                    if deepest >= depth {
                        out[depth * d..(deepest + 1) * d].fill(0.0);
                        depth = deepest + 1;
                    }
                    for k in 0..=deepest {
                        for (o, v) in out[k * d..(k + 1) * d].iter_mut().zip(jump.iter()) {
                            *o += v;
                        }
                    }
                }
                depth
            }
            Kind::Killed { .. } => unreachable!("killed paths carry no values"),
        }
    }
}

fn jumps_kind(rate: f64, law: JumpLaw) -> Kind {
    Kind::Jumps { rate, exp_neg_rate: (-rate).exp(), law }
}

#[inline]
fn spectral_add(alpha: f64, atoms: &[(f64, Vec<f64>)], scale: f64, s: &mut DrawStream, out: &mut [f64]) {
    for (w, dir) in atoms {
        let x = scale * w * s.next_sym_stable(alpha);
        for (o, u) in out.iter_mut().zip(dir) {
            *o += x * u;
        }
    }
}

#[inline]
fn draw_jump(law: &JumpLaw, s: &mut DrawStream, out: &mut [f64]) {
    match law {
        JumpLaw::Table { alias, values } => {
            let i = alias.sample(s);
            let d = out.len();
            out.copy_from_slice(&values[i * d..(i + 1) * d]);
        }
        JumpLaw::Zp { modulus } => {
            let u = s.next_u64();
            let j = ((u as u128 * (*modulus - 1) as u128) >> 64) as u64 + 1;
            let mag = TAU * j as f64 / *modulus as f64;
            out[0] = if s.next_u64() >> 63 == 1 { -mag } else { mag };
        }
        JumpLaw::GnpFinite { alias, w } => {
            let j = alias.sample(s) as u64 + 1;
            let mag = TAU * j as f64 / (1u64 << w) as f64;
            out[0] = if s.next_u64() >> 63 == 1 { -mag } else { mag };
        }
        JumpLaw::GnpStreaming { cap } => out[0] = read_tapes(s, *cap).jump(),
    }
}

/// Deepest dead level of a killed path: dead at `k` iff `2^-k >= Y`,
/// `Y ~ Exp(rate)`.
#[inline]
pub(crate) fn kill_level(prefix: u64, rate: f64, levels: u32) -> Option<u32> {
    let mut s = DrawStream::from_digest(finish_digest(prefix, 0, purpose::KILL_TIME), 0);
    let y = s.next_exp1() / rate;
    if y > 1.0 {
        return None;
    }
    let mut k = (-y.log2()).floor().max(0.0) as u32;
    // guard the rounding of log2 at exact powers of two
    while k > 0 && (-(k as f64)).exp2() < y {
        k -= 1;
    }
    while k < levels && (-((k + 1) as f64)).exp2() >= y {
        k += 1;
    }
    Some(k.min(levels))
}
