//! Goodness-of-fit and Monte Carlo helpers used to verify the samplers and
//! sketches against closed forms.

use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    /// True when the null hypothesis survives at significance `level`.
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda)).exp();
        let mut sum = 0.0;
        let mut k = 1.0f64;
        loop {
            let term = y.powf(k * k);
            sum += term;
            if term < 1e-17 {
                break;
            }
            k += 2.0;
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            sum += sign * term;
            if term < 1e-17 {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn ks_p_value(effective_n: f64, d: f64) -> f64 {
    let en = effective_n.sqrt();
    kolmogorov_survival((en + 0.12 + 0.11 / en) * d)
}

fn sort_floats(xs: &mut [f64]) {
    xs.sort_by(|a, b| a.total_cmp(b));
}

/// One-sample KS test of `data` against a continuous CDF. Sorts `data`.
pub fn ks_one_sample(data: &mut [f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    sort_floats(data);
    let n = data.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in data.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: ks_p_value(n, d) }
}

/// Two-sample KS test with the asymptotic p-value. Both samples need at
/// least 100 points.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 100 || b.len() < 100 {
        return Err(Error::OutOfRange(format!(
            "two-sample KS needs at least 100 points per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_floats(&mut a);
    sort_floats(&mut b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(na * nb / (na + nb), d) })
}

/// Pearson chi-square p-value with `cells - 1` degrees of freedom.
pub fn chi_square_p_value(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    ChiSquared::new(dof).map(|c| c.sf(stat)).unwrap_or(f64::NAN)
}

/// Mean of `exp(i z X)` with its Monte Carlo standard error
/// `sqrt((1 - |mean|^2) / n)`.
#[derive(Debug, Clone, Copy)]
pub struct CfEstimate {
    pub z: f64,
    pub mean: Complex64,
    pub std_err: f64,
}

impl CfEstimate {
    pub fn within(&self, target: Complex64, n_se: f64) -> bool {
        (self.mean - target).norm() <= n_se * self.std_err
    }
}

/// Empirical characteristic function from the unit-modulus values `exp(i phase)`.
pub fn phase_mean(phases: &[f64]) -> CfEstimate {
    let n = phases.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &p in phases {
        re += p.cos();
        im += p.sin();
    }
    let mean = Complex64::new(re / n, im / n);
    let var = (1.0 - mean.norm_sqr()).max(0.0);
    CfEstimate { z: 1.0, mean, std_err: (var / n).sqrt() }
}

pub fn empirical_cf(samples: &[f64], z: f64) -> CfEstimate {
    let phases: Vec<f64> = samples.iter().map(|&x| z * x).collect();
    CfEstimate { z, ..phase_mean(&phases) }
}

pub fn empirical_cf_points(samples: &[f64], zs: &[f64]) -> Vec<CfEstimate> {
    zs.iter().map(|&z| empirical_cf(samples, z)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct LaplaceEstimate {
    pub z: f64,
    pub mean: f64,
    pub std_err: f64,
}

/// Mean of `exp(-z X)` for nonnegative samples.
pub fn empirical_laplace(samples: &[f64], z: f64) -> LaplaceEstimate {
    let n = samples.len() as f64;
    let vals: Vec<f64> = samples.iter().map(|&x| (-z * x).exp()).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    LaplaceEstimate { z, mean, std_err: (var / n).sqrt() }
}

/// Median; reorders `xs`.
pub fn median(xs: &mut [f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated quantile; reorders `xs`.
pub fn quantile(xs: &mut [f64], q: f64) -> f64 {
    assert!(!xs.is_empty());
    sort_floats(xs);
    let pos = q.clamp(0.0, 1.0) * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    xs[lo] * (1.0 - frac) + xs[hi] * frac
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
