use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::randomness::{check_alpha, check_q, POISSON_MAX_MEAN};

/// Closed description of a Lévy process. The JSON form carries a `kind` tag
/// and named parameters; it is embedded verbatim in config and sketch files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// Deterministic path `X_t = gamma * t`.
    Drift {
        #[serde(deserialize_with = "scalar_or_vec")]
        gamma: Vec<f64>,
    },
    /// Brownian motion with covariance `A` per unit time.
    Gaussian {
        #[serde(alias = "sigma2")]
        covariance: Covariance,
    },
    #[serde(rename = "stable1d")]
    Stable1D { alpha: f64 },
    /// Symmetric stable process with a finite spectral measure.
    StableSpectral { alpha: f64, atoms: Vec<SpectralAtom> },
    CompoundPoisson { jumps: Vec<Jump> },
    /// Subordinated stable process targeting `(sum_j |z_j|^p)^q`.
    SubordinatedLpq { p: f64, q: f64, d: usize },
    /// Jumps to the cemetery state at an exponential time.
    PureKilled { rate: f64 },
    /// Uniform jumps on the `modulus`-th roots of unity; exponent `1{P ∤ z}` on integers.
    #[serde(rename = "zp_uniform")]
    ZpUniform { modulus: u64 },
    /// The nearly periodic exponent truncated at `2^w`.
    GnpFinite { w: u32 },
    /// The bit-tape compound Poisson construction with `depth_cap` levels.
    GnpStreaming { depth_cap: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Covariance {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub weight: f64,
    #[serde(deserialize_with = "scalar_or_vec")]
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    #[serde(deserialize_with = "scalar_or_vec")]
    pub value: Vec<f64>,
    pub rate: f64,
}

impl Jump {
    pub fn scalar(value: f64, rate: f64) -> Self {
        Jump { value: vec![value], rate }
    }
}

fn scalar_or_vec<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match Repr::deserialize(de)? {
        Repr::One(x) => vec![x],
        Repr::Many(v) => v,
    })
}

pub const MAX_GNP_W: u32 = 16;
pub const MAX_DEPTH_CAP: u32 = 62;
pub const MAX_MODULUS: u64 = 1 << 32;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

impl ProcessSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::Drift { .. } => "drift",
            ProcessSpec::Gaussian { .. } => "gaussian",
            ProcessSpec::Stable1D { .. } => "stable1d",
            ProcessSpec::StableSpectral { .. } => "stable_spectral",
            ProcessSpec::CompoundPoisson { .. } => "compound_poisson",
            ProcessSpec::SubordinatedLpq { .. } => "subordinated_lpq",
            ProcessSpec::PureKilled { .. } => "pure_killed",
            ProcessSpec::ZpUniform { .. } => "zp_uniform",
            ProcessSpec::GnpFinite { .. } => "gnp_finite",
            ProcessSpec::GnpStreaming { .. } => "gnp_streaming",
        }
    }

    /// Checks every parameter range and returns the dimension `d`.
    pub fn validate(&self) -> Result<usize> {
        match self {
            ProcessSpec::Drift { gamma } => {
                if gamma.is_empty() || gamma.iter().any(|g| !g.is_finite()) {
                    return Err(invalid("drift needs a nonempty finite gamma"));
                }
                Ok(gamma.len())
            }
            ProcessSpec::Gaussian { covariance } => match covariance {
                Covariance::Scalar(s) => {
                    if !(*s >= 0.0 && s.is_finite()) {
                        return Err(invalid(format!("variance must be nonnegative, got {s}")));
                    }
                    Ok(1)
                }
                Covariance::Matrix(rows) => {
                    cholesky(rows)?;
                    Ok(rows.len())
                }
            },
            ProcessSpec::Stable1D { alpha } => {
                check_alpha(*alpha).map_err(|e| invalid(e.to_string()))?;
                Ok(1)
            }
            ProcessSpec::StableSpectral { alpha, atoms } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid(format!("spectral alpha must lie in (0, 2), got {alpha}")));
                }
                let first = atoms.first().ok_or_else(|| invalid("spectral measure has no atoms"))?;
                let d = first.direction.len();
                if d == 0 {
                    return Err(invalid("spectral direction is empty"));
                }
                for atom in atoms {
                    positive("atom weight", atom.weight)?;
                    if atom.direction.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: atom.direction.len() });
                    }
                    let norm = atom.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm.is_nan() || (norm - 1.0).abs() > 1e-12 {
                        return Err(invalid(format!("spectral direction has norm {norm}, expected 1")));
                    }
                }
                Ok(d)
            }
            ProcessSpec::CompoundPoisson { jumps } => {
                let first = jumps.first().ok_or_else(|| invalid("compound Poisson has no jumps"))?;
                let d = first.value.len();
                if d == 0 {
                    return Err(invalid("jump value is empty"));
                }
                let mut total = 0.0;
                for jump in jumps {
                    positive("jump rate", jump.rate)?;
                    if jump.value.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: jump.value.len() });
                    }
                    if jump.value.iter().any(|x| !x.is_finite()) {
                        return Err(invalid("jump value is not finite"));
                    }
                    total += jump.rate;
                }
                if total > POISSON_MAX_MEAN {
                    return Err(invalid(format!("total jump rate {total} exceeds 2^30")));
                }
                Ok(d)
            }
            ProcessSpec::SubordinatedLpq { p, q, d } => {
                check_alpha(*p).map_err(|e| invalid(e.to_string()))?;
                check_q(*q).map_err(|e| invalid(e.to_string()))?;
                if *d == 0 {
                    return Err(invalid("subordinated process needs d >= 1"));
                }
                Ok(*d)
            }
            ProcessSpec::PureKilled { rate } => {
                positive("kill rate", *rate)?;
                Ok(1)
            }
            ProcessSpec::ZpUniform { modulus } => {
                if !(2..=MAX_MODULUS).contains(modulus) {
                    return Err(invalid(format!("modulus must lie in [2, 2^32], got {modulus}")));
                }
                Ok(1)
            }
            ProcessSpec::GnpFinite { w } => {
                if !(1..=MAX_GNP_W).contains(w) {
                    return Err(invalid(format!("w must lie in [1, {MAX_GNP_W}], got {w}")));
                }
                Ok(1)
            }
            ProcessSpec::GnpStreaming { depth_cap } => {
                if !(1..=MAX_DEPTH_CAP).contains(depth_cap) {
                    return Err(invalid(format!("depth cap must lie in [1, {MAX_DEPTH_CAP}], got {depth_cap}")));
                }
                Ok(1)
            }
        }
    }

    /// Stability index seen by a median estimator over unit-time samples,
    /// or `None` when the process is not strictly stable.
    pub fn alpha_eff(&self) -> Option<f64> {
        match self {
            ProcessSpec::Stable1D { alpha } | ProcessSpec::StableSpectral { alpha, .. } => Some(*alpha),
            ProcessSpec::Gaussian { .. } => Some(2.0),
            ProcessSpec::SubordinatedLpq { p, q, .. } => Some(p * q),
            _ => None,
        }
    }

    /// Whether `X_1` can be drawn directly.
    pub fn unit_time_samplable(&self) -> bool {
        self.alpha_eff().is_some()
    }

    /// Real, even exponents in one dimension.
    pub fn is_real_symmetric(&self) -> bool {
        match self {
            ProcessSpec::Gaussian { .. }
            | ProcessSpec::Stable1D { .. }
            | ProcessSpec::StableSpectral { .. }
            | ProcessSpec::SubordinatedLpq { .. }
            | ProcessSpec::PureKilled { .. }
            | ProcessSpec::ZpUniform { .. }
            | ProcessSpec::GnpFinite { .. }
            | ProcessSpec::GnpStreaming { .. } => true,
            ProcessSpec::CompoundPoisson { jumps } => jumps.iter().all(|j| {
                jumps
                    .iter()
                    .any(|k| k.rate == j.rate && k.value.iter().zip(&j.value).all(|(a, b)| *a == -b))
            }),
            ProcessSpec::Drift { .. } => false,
        }
    }
}

/// Lower-triangular Cholesky factor, row-major `d x d`. Positive
/// semidefinite inputs are accepted; zero pivots leave a zero column.
pub(crate) fn cholesky(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = rows.len();
    if d == 0 {
        return Err(invalid("covariance matrix is empty"));
    }
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(invalid(format!("covariance row {i} has {} entries, expected {d}", row.len())));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(invalid("covariance is not finite"));
        }
        for j in 0..i {
            if (row[j] - rows[j][i]).abs() > 1e-12 * scale {
                return Err(invalid("covariance is not symmetric"));
            }
        }
    }
    let tol = 1e-12 * scale;
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = rows[i][j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s < -tol {
                    return Err(invalid("covariance is not positive semidefinite"));
                }
                l[i * d + i] = s.max(0.0).sqrt();
            } else if l[j * d + j] > 0.0 {
                l[i * d + j] = s / l[j * d + j];
            } else if s.abs() > tol {
                return Err(invalid("covariance is not positive semidefinite"));
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let specs = vec![
            ProcessSpec::Drift { gamma: vec![1.0, -2.0] },
            ProcessSpec::Gaussian { covariance: Covariance::Scalar(2.0) },
            ProcessSpec::Gaussian { covariance: Covariance::Matrix(vec![vec![2.0, 1.0], vec![1.0, 2.0]]) },
            ProcessSpec::Stable1D { alpha: 1.0 },
            ProcessSpec::CompoundPoisson { jumps: vec![Jump::scalar(1.0, 0.5), Jump::scalar(-1.0, 0.5)] },
            ProcessSpec::SubordinatedLpq { p: 2.0, q: 0.5, d: 3 },
            ProcessSpec::PureKilled { rate: 1.0 },
            ProcessSpec::ZpUniform { modulus: 32 },
            ProcessSpec::GnpFinite { w: 5 },
            ProcessSpec::GnpStreaming { depth_cap: 20 },
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: ProcessSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn accepts_scalar_shorthands() {
        let s: ProcessSpec = serde_json::from_str(r#"{"kind":"gaussian","sigma2":2}"#).unwrap();
        assert_eq!(s, ProcessSpec::Gaussian { covariance: Covariance::Scalar(2.0) });
        let s: ProcessSpec =
            serde_json::from_str(r#"{"kind":"compound_poisson","jumps":[{"value":1,"rate":0.5}]}"#).unwrap();
        assert_eq!(s.validate().unwrap(), 1);
        let s: ProcessSpec = serde_json::from_str(r#"{"kind":"stable1d","alpha":1}"#).unwrap();
        assert_eq!(s, ProcessSpec::Stable1D { alpha: 1.0 });
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = vec![
            ProcessSpec::Stable1D { alpha: 0.0 },
            ProcessSpec::Stable1D { alpha: 2.5 },
            ProcessSpec::StableSpectral {
                alpha: 1.0,
                atoms: vec![SpectralAtom { weight: 1.0, direction: vec![1.0, 1.0] }],
            },
            ProcessSpec::StableSpectral { alpha: 2.0, atoms: vec![SpectralAtom { weight: 1.0, direction: vec![1.0] }] },
            ProcessSpec::CompoundPoisson { jumps: vec![Jump::scalar(1.0, 0.0)] },
            ProcessSpec::CompoundPoisson { jumps: vec![] },
            ProcessSpec::SubordinatedLpq { p: 2.0, q: 1.0, d: 2 },
            ProcessSpec::PureKilled { rate: -1.0 },
            ProcessSpec::ZpUniform { modulus: 1 },
            ProcessSpec::GnpFinite { w: 0 },
            ProcessSpec::GnpFinite { w: 17 },
            ProcessSpec::GnpStreaming { depth_cap: 0 },
            ProcessSpec::Gaussian { covariance: Covariance::Matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0]]) },
            ProcessSpec::Gaussian { covariance: Covariance::Matrix(vec![vec![1.0, 0.5], vec![0.4, 1.0]]) },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let a = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 1.0]];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a[i][j]).abs() < 1e-12);
            }
        }
        // rank one
        let l = cholesky(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(l, vec![1.0, 0.0, 1.0, 0.0]);
    }
}
