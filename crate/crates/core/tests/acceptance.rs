//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! the real stdout, then asserts. Tests take a shared lock so that timings
//! are measured without competition from the others.

use std::f64::consts::TAU;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use levy_sketch::fhl::{fhl_build, fhl_decompose};
use levy_sketch::harness::{gen_stream, ExperimentConfig, SketchConfig, Stream, StreamParams, StreamSource, ValueDist};
use levy_sketch::oracle::stats::{
    chi_square_p_value, empirical_cf, empirical_laplace, ks_two_sample, median, ols_slope, phase_mean,
};
use levy_sketch::oracle::{enumerate_gnp_law, enumerate_streaming_law, exact_moment, SparseVector};
use levy_sketch::processes::{
    gnp_coefficients, gnp_jump_streaming, gnp_total_rate, Covariance, Jump, ProcessSpec, SpectralAtom,
};
use levy_sketch::randomness::{stable_onesided, stable_symmetric, DrawStream};
use levy_sketch::tower::{circular_distance, default_max_level, Coupling, KilledTowerConfig};
use levy_sketch::{
    AnySketch, Error, KilledTowerSketch, MasterSeed, OracleKey, StableConfig, StableSketch, Target, TowerConfig,
    TowerSketch,
};
use num_complex::Complex64;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("acceptance {n:>2} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn rng(tag: u64) -> DrawStream {
    OracleKey::new(MasterSeed(0x5eed_0000 + tag as u128), tag, 0, 0, 0).stream(0)
}

fn below(s: &mut DrawStream, n: u64) -> u64 {
    ((s.next_u64() as u128 * n as u128) >> 64) as u64
}

fn two_atom() -> ProcessSpec {
    ProcessSpec::CompoundPoisson { jumps: vec![Jump::scalar(1.0, 1.0), Jump::scalar(-0.3, 2.0)] }
}

fn symmetric_two_atom() -> ProcessSpec {
    ProcessSpec::CompoundPoisson { jumps: vec![Jump::scalar(1.0, 1.0), Jump::scalar(-1.0, 1.0)] }
}

fn turnstile(n: u64, updates: u64) -> StreamParams {
    StreamParams { n, d: 1, updates, values: ValueDist::Integer { max: 3 }, delete_fraction: 0.2 }
}

fn tower_experiment(spec: ProcessSpec, max_level: u32, m: usize, trials: u32, base: u128) -> ExperimentConfig {
    ExperimentConfig {
        sketch: SketchConfig::Tower { target: spec.into(), max_level: Some(max_level), n: None, m },
        trials,
        base_seed: MasterSeed(base),
        stream: StreamSource::Generate { params: turnstile(1000, 1200), seed: None },
        report: None,
    }
}

#[test]
fn a01_tower_accuracy() {
    let _guard = serial();
    let specs = [
        ProcessSpec::Stable1D { alpha: 1.0 },
        ProcessSpec::Gaussian { covariance: Covariance::Scalar(2.0) },
        ProcessSpec::ZpUniform { modulus: 32 },
        ProcessSpec::GnpFinite { w: 5 },
        symmetric_two_atom(),
    ];
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, spec) in specs.into_iter().enumerate() {
        let name = spec.name();
        let report = tower_experiment(spec, 24, 2500, 100, 0xacc1_0000 + i as u128).run().unwrap();
        let in_range = report.records.iter().all(|r| (10.0..=1e4).contains(&r.exact.norm()));
        let within = report.records.iter().filter(|r| r.relative_error <= 0.10).count();
        let med = report.aggregate.median_relative_error;
        pass &= in_range && med <= 0.04 && within >= 95;
        parts.push(format!("{name}: median {med:.4}, {within}/100 within 0.10{}", if in_range { "" } else { ", |f| out of range" }));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 600.0;
    verdict(1, "tower accuracy", pass, &format!("{}; runtime {secs:.0}s", parts.join("; ")));
}

#[test]
fn a02_error_scaling() {
    let _guard = serial();
    let ms = [625usize, 2500, 10000];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let spec = ProcessSpec::ZpUniform { modulus: 32 };
        let report =
            tower_experiment(spec, default_max_level(1000), m, 100, 0xacc2_0000 + i as u128).run().unwrap();
        xs.push((m as f64).ln());
        ys.push(report.aggregate.median_relative_error.ln());
    }
    let slope = ols_slope(&xs, &ys);
    let medians: Vec<String> = ys.iter().map(|y| format!("{:.4}", y.exp())).collect();
    verdict(
        2,
        "error scaling",
        (-0.65..=-0.35).contains(&slope),
        &format!("medians {} at m = 625, 2500, 10000; slope {slope:.3}", medians.join(", ")),
    );
}

/// A spec, an input and a level with `2^-k |f(x)|` in `[0.25, 2]`.
struct Triple {
    spec: ProcessSpec,
    x: SparseVector,
    f: Complex64,
    k: u32,
}

fn lemma_triples() -> Vec<Triple> {
    let pool = [
        ProcessSpec::Stable1D { alpha: 1.5 },
        ProcessSpec::Gaussian { covariance: Covariance::Scalar(1.0) },
        two_atom(),
        ProcessSpec::GnpFinite { w: 4 },
        ProcessSpec::StableSpectral {
            alpha: 0.8,
            atoms: vec![
                SpectralAtom { weight: 1.0, direction: vec![1.0, 0.0] },
                SpectralAtom { weight: 0.5, direction: vec![0.6, 0.8] },
            ],
        },
    ];
    let mut s = rng(3);
    let mut out = Vec::new();
    for spec in pool {
        let d = spec.validate().unwrap();
        loop {
            let support = 1 + below(&mut s, 12);
            let mut x = SparseVector::new(d);
            for v in 0..support {
                let y: Vec<f64> = (0..d).map(|_| (below(&mut s, 19) as f64 - 9.0) * 0.5).collect();
                x.update(v * 7 + 1, &y).unwrap();
            }
            let f = exact_moment(&x, &Target::from(spec.clone())).unwrap();
            if f.norm() < 0.25 {
                continue;
            }
            let k = (f.norm() / 2.0).log2().ceil().max(0.0) as u32;
            out.push(Triple { spec, x, f, k });
            break;
        }
    }
    out
}

fn level_phases(t: &Triple, m: usize, seed: u128) -> Vec<f64> {
    let mut sketch = TowerSketch::new(TowerConfig::new(t.spec.clone(), t.k, m, MasterSeed(seed)).unwrap()).unwrap();
    for (v, y) in t.x.iter() {
        sketch.update(v, y).unwrap();
    }
    sketch.level(t.k).to_vec()
}

#[test]
fn a03_a04_level_mean_and_variance() {
    let _guard = serial();
    let mut mean_pass = true;
    let mut var_pass = true;
    let mut mean_parts = Vec::new();
    let mut var_parts = Vec::new();
    for (i, t) in lemma_triples().iter().enumerate() {
        let scaled = t.f / (t.k as f64).exp2();
        assert!((0.25..=2.0).contains(&scaled.norm()));
        let phases = level_phases(t, 100_000, 0xacc3_0000 + i as u128);
        let est = phase_mean(&phases);
        let target = (-scaled).exp();
        let ok = est.within(target, 3.0);
        mean_pass &= ok;
        mean_parts.push(format!(
            "{} k={} |dev|/se {:.2}",
            t.spec.name(),
            t.k,
            (est.mean - target).norm() / est.std_err
        ));

        let n = phases.len() as f64;
        let dev: Vec<f64> = phases.iter().map(|p| (Complex64::from_polar(1.0, *p) - est.mean).norm_sqr()).collect();
        let var = dev.iter().sum::<f64>() / n;
        let sd = (dev.iter().map(|d| (d - var).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let bound = 2.0 * scaled.re + 3.0 * sd / n.sqrt();
        let ok = var <= bound;
        var_pass &= ok;
        var_parts.push(format!("{} var {var:.4} <= {bound:.4}", t.spec.name()));
    }
    let (pass3, pass4) = (mean_pass, var_pass);
    let out = std::panic::catch_unwind(|| verdict(3, "level mean", pass3, &mean_parts.join("; ")));
    verdict(4, "level variance bound", pass4, &var_parts.join("; "));
    if let Err(e) = out {
        std::panic::resume_unwind(e);
    }
}

fn random_spec(s: &mut DrawStream) -> ProcessSpec {
    match below(s, 6) {
        0 => ProcessSpec::Stable1D { alpha: 0.5 + 1.5 * s.next_f64() },
        1 => ProcessSpec::Gaussian { covariance: Covariance::Scalar(0.5 + s.next_f64()) },
        2 => two_atom(),
        3 => ProcessSpec::ZpUniform { modulus: 2 + below(s, 60) },
        4 => ProcessSpec::GnpFinite { w: 1 + below(s, 6) as u32 },
        _ => ProcessSpec::GnpStreaming { depth_cap: 1 + below(s, 20) as u32 },
    }
}

fn small_stream(seed: u64, positive: bool) -> Stream {
    let mut params = turnstile(40, 60);
    params.values = ValueDist::Uniform { low: -4.0, high: 4.0 };
    let mut stream = gen_stream(&params, MasterSeed(seed as u128)).unwrap();
    if positive {
        stream.updates.retain(|u| u.value[0] != 0.0);
        for u in &mut stream.updates {
            u.value[0] = u.value[0].abs();
        }
    }
    stream
}

fn negated(stream: &Stream) -> Stream {
    let mut out = stream.clone();
    for u in &mut out.updates {
        for y in &mut u.value {
            *y = -*y;
        }
    }
    out
}

fn feed(mut sketch: AnySketch, stream: &Stream) -> AnySketch {
    for u in &stream.updates {
        sketch.update(u.index, &u.value).unwrap();
    }
    sketch
}

/// The `i`-th merge scenario: an empty sketch and the two streams.
fn merge_case(i: u64) -> (AnySketch, Stream, Stream) {
    let mut s = rng(500 + i);
    let seed = MasterSeed(0xacc5_0000 + i as u128);
    let (sketch, positive) = match i % 5 {
        0 | 1 => (AnySketch::Tower(TowerSketch::new(TowerConfig::new(random_spec(&mut s), 12, 64, seed).unwrap()).unwrap()), false),
        2 => {
            let palette = Target::Palette(levy_sketch::processes::Palette {
                specs: vec![random_spec(&mut s), random_spec(&mut s)],
                assign: levy_sketch::processes::Assignment::Modulo,
            });
            (AnySketch::Tower(TowerSketch::new(TowerConfig::new(palette, 12, 64, seed).unwrap()).unwrap()), false)
        }
        3 => {
            let spec = ProcessSpec::Stable1D { alpha: 0.8 + 1.2 * s.next_f64() };
            (AnySketch::Stable(StableSketch::new(StableConfig::new(spec, 64, seed).unwrap()).unwrap()), false)
        }
        _ => {
            let coupling = if i.is_multiple_of(2) { Coupling::Hll } else { Coupling::Pcsa };
            let config = KilledTowerConfig::new(1.0, 12, 64, seed, coupling).unwrap();
            (AnySketch::Killed(KilledTowerSketch::new(config).unwrap()), true)
        }
    };
    (sketch, small_stream(2 * i, positive), small_stream(2 * i + 1, positive))
}

fn register_gap(a: &AnySketch, b: &AnySketch) -> f64 {
    match (a, b) {
        (AnySketch::Tower(a), AnySketch::Tower(b)) => {
            a.registers().iter().zip(b.registers()).map(|(x, y)| circular_distance(*x, *y)).fold(0.0, f64::max)
        }
        (AnySketch::Stable(a), AnySketch::Stable(b)) => {
            let scale = 1.0 + a.registers().iter().chain(b.registers()).fold(0.0f64, |m, r| m.max(r.abs()));
            a.registers().iter().zip(b.registers()).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
        }
        (AnySketch::Killed(_), AnySketch::Killed(_))
            if a.to_bytes() == b.to_bytes() => {
                0.0
            }
        _ => f64::INFINITY,
    }
}

const MERGE_WORKER_DIR: &str = "LEVY_ACCEPTANCE_MERGE_DIR";
const CROSS_CASES: [u64; 5] = [0, 2, 3, 4, 9];

/// Runs only when re-executed by the merge check: writes each scenario's
/// two sketches and their merge from a separate process.
#[test]
fn merge_worker() {
    let Some(dir) = std::env::var_os(MERGE_WORKER_DIR) else { return };
    let dir = PathBuf::from(dir);
    for i in CROSS_CASES {
        let (empty, s1, s2) = merge_case(i);
        let a = feed(empty.clone(), &s1);
        let b = feed(empty, &s2);
        std::fs::write(dir.join(format!("{i}.a")), a.to_bytes()).unwrap();
        std::fs::write(dir.join(format!("{i}.b")), b.to_bytes()).unwrap();
        std::fs::write(dir.join(format!("{i}.ab")), a.merge(&b).unwrap().to_bytes()).unwrap();
    }
}

#[test]
fn a05_mergeability() {
    let _guard = serial();
    let mut worst_merge = 0.0f64;
    let mut worst_cancel = 0.0f64;
    for i in 0..50 {
        let (empty, s1, s2) = merge_case(i);
        let a = feed(empty.clone(), &s1);
        let b = feed(empty.clone(), &s2);
        let concat = feed(empty.clone(), &s1.concat(&s2).unwrap());
        worst_merge = worst_merge.max(register_gap(&a.merge(&b).unwrap(), &concat));
        worst_merge = worst_merge.max(register_gap(&b.merge(&a).unwrap(), &concat));
        if !matches!(empty, AnySketch::Killed(_)) {
            let cancelled = feed(a.clone(), &negated(&s1));
            worst_cancel = worst_cancel.max(register_gap(&cancelled, &empty));
        }
    }

    let dir = std::env::temp_dir().join(format!("levy-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let status = Command::new(std::env::current_exe().unwrap())
        .args(["--exact", "merge_worker", "--test-threads", "1"])
        .env(MERGE_WORKER_DIR, &dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stdout));
    let mut identical = 0;
    for i in CROSS_CASES {
        let read = |ext: &str| std::fs::read(dir.join(format!("{i}.{ext}"))).unwrap();
        let (empty, s1, s2) = merge_case(i);
        let local = feed(empty.clone(), &s1).merge(&feed(empty, &s2)).unwrap().to_bytes();
        let remote_a = AnySketch::from_bytes(&read("a")).unwrap();
        let remote_b = AnySketch::from_bytes(&read("b")).unwrap();
        let mixed = remote_a.merge(&remote_b).unwrap().to_bytes();
        identical += usize::from(local == read("ab") && mixed == local);
    }
    std::fs::remove_dir_all(&dir).ok();

    let pass = worst_merge <= 1e-9 && worst_cancel <= 1e-9 && identical == CROSS_CASES.len();
    verdict(
        5,
        "mergeability",
        pass,
        &format!(
            "merge gap {worst_merge:.1e}, cancellation gap {worst_cancel:.1e}, cross-process bytes identical {identical}/{}",
            CROSS_CASES.len()
        ),
    );
}

/// Dyadic valuation by repeated halving.
fn valuation(mut x: u64) -> u32 {
    let mut t = 0;
    while x.is_multiple_of(2) {
        x /= 2;
        t += 1;
    }
    t
}

#[test]
fn a06_nearly_periodic_identity() {
    let _guard = serial();
    let mut worst = 0.0f64;
    let mut rates_exact = true;
    for w in 1..=10u32 {
        let n = 1u64 << w;
        let coef = gnp_coefficients(w).unwrap();
        for x in 0..=2 * n {
            let rebuilt: f64 = coef.iter().map(|c| c.rate * (1.0 - (c.magnitude * x as f64).cos())).sum();
            let target = if x % n == 0 { 0.0 } else { (-(valuation(x) as f64)).exp2() };
            worst = worst.max((rebuilt - target).abs());
        }
        // (2^{2w} - 1) / (3 * 2^{2w-1}), compared as integers over the shared denominator
        let law = enumerate_gnp_law(w).unwrap();
        let numerator_sum: u128 = law.numerators.iter().sum();
        rates_exact &= numerator_sum == (1u128 << (2 * w)) - 1 && law.denominator == 2 * numerator_sum;
        let den = 3.0 * (2.0f64).powi(2 * w as i32 - 1);
        let rate_sum: f64 = coef.iter().map(|c| c.rate).sum();
        rates_exact &= (rate_sum - numerator_sum as f64 / den).abs() < 1e-12;
        rates_exact &= gnp_total_rate(w) == ((1u128 << (2 * w)) - 1) as f64 / den;
    }

    let w = 8u32;
    let law = enumerate_streaming_law(w).unwrap();
    let cells = (1usize << w) - 1;
    let mut observed = vec![0u64; 2 * cells];
    let key = OracleKey::new(MasterSeed(0xacc6), 0, 0, 0, 0);
    let draws = 1_000_000u64;
    for ctr in 0..draws {
        let jump = gnp_jump_streaming(&key, ctr, w).unwrap();
        let j = (jump.abs() * (1u64 << w) as f64 / TAU).round() as usize;
        assert!((1..=cells).contains(&j), "jump {jump}");
        observed[(j - 1) + if jump < 0.0 { cells } else { 0 }] += 1;
    }
    let expected: Vec<f64> =
        (0..2 * cells).map(|c| draws as f64 * law.probability((c % cells + 1) as u64)).collect();
    let p = chi_square_p_value(&observed, &expected);

    let pass = worst < 1e-9 && rates_exact && p > 0.001;
    verdict(
        6,
        "nearly periodic identity",
        pass,
        &format!("max reconstruction error {worst:.1e}, exact rates {rates_exact}, bit-tape chi-square p = {p:.4}"),
    );
}

#[test]
fn a07_fourier_hahn_levy() {
    let _guard = serial();
    let mut s = rng(7);
    let periods = [4usize, 6, 10, 64, 100, 512, 2048, 4096, 6000, 8192, 16384];
    let mut worst_residual = 0.0f64;
    let mut worst_rebuild = 0.0f64;
    for i in 0..50 {
        let p = periods[i % periods.len()];
        let mut f = vec![0.0; p];
        for x in 1..=p / 2 {
            let v = 10.0 * s.next_f64();
            f[x] = v;
            f[p - x] = v;
        }
        let d = fhl_decompose(&f, p).unwrap();
        worst_residual = worst_residual.max(d.residual);
        if p <= 2048 {
            let c = d.signed();
            for (x, fx) in f.iter().enumerate() {
                let rebuilt: f64 =
                    c.iter().enumerate().map(|(j, cj)| cj * (1.0 - (TAU * (j * x % p) as f64 / p as f64).cos())).sum();
                worst_rebuild = worst_rebuild.max((rebuilt - fx).abs());
            }
        }
    }

    let mut periodic_negative = 0.0f64;
    let periodic = [
        (ProcessSpec::ZpUniform { modulus: 32 }, 32usize),
        (ProcessSpec::ZpUniform { modulus: 7 }, 14),
        (ProcessSpec::GnpFinite { w: 5 }, 32),
        (ProcessSpec::GnpFinite { w: 8 }, 256),
    ];
    for (spec, p) in periodic {
        let f: Vec<f64> = (0..p).map(|x| spec.char_exponent(&[x as f64]).unwrap().re).collect();
        let d = fhl_decompose(&f, p).unwrap();
        periodic_negative = periodic_negative.max(d.negative.iter().fold(0.0, |a, c| a.max(*c)));
    }

    let p = 64;
    let zero_one_five: Vec<f64> = (0..p)
        .map(|x: usize| match x.min(p - x) {
            0 => 0.0,
            1 => 1.0,
            _ => 5.0,
        })
        .collect();
    let decomp = fhl_decompose(&zero_one_five, p).unwrap();
    let mut x = SparseVector::new(1);
    let mut exact = 0.0;
    for v in 0..1500u64 {
        let sign = if s.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        let y = if v < 1000 { sign } else { sign * (2 + below(&mut s, 9)) as f64 };
        x.update(v, &[y]).unwrap();
        exact += if y.abs() == 1.0 { 1.0 } else { 5.0 };
    }
    assert_eq!(exact, 3500.0);
    let max_level = default_max_level(1500);
    let mut errors: Vec<f64> = (0..100u128)
        .map(|t| {
            let mut towers = fhl_build(&decomp, max_level, 10_000, MasterSeed(0xacc7_0000 + t)).unwrap();
            for (v, y) in x.iter() {
                towers.update(v, y).unwrap();
            }
            (towers.estimate().unwrap().estimate.re - exact).abs() / exact
        })
        .collect();
    let med = median(&mut errors);

    let pass = worst_residual < 1e-9 && worst_rebuild < 1e-9 && periodic_negative < 1e-9 && med <= 0.10;
    verdict(
        7,
        "fourier-hahn-levy",
        pass,
        &format!(
            "residual {worst_residual:.1e}, direct rebuild {worst_rebuild:.1e}, periodic negative part {periodic_negative:.1e}, 0-1-5 median error {med:.4}"
        ),
    );
}

/// Stable registers on `x` against one-dimensional stable registers on
/// `x'(v) = f(x(v))^{1/alpha}`.
fn emulation_p_value(spec: ProcessSpec, alpha: f64, tag: u64) -> f64 {
    let d = spec.validate().unwrap();
    let mut s = rng(tag);
    let m = 10_000;
    let mut lifted = StableSketch::new(StableConfig::new(spec.clone(), m, MasterSeed(tag as u128)).unwrap()).unwrap();
    let mut indyk = StableSketch::new(
        StableConfig::new(ProcessSpec::Stable1D { alpha }, m, MasterSeed(tag as u128 + 1)).unwrap(),
    )
    .unwrap();
    for v in 0..100u64 {
        let y: Vec<f64> = (0..d).map(|_| (below(&mut s, 11) as f64 - 5.0) + s.next_f64()).collect();
        let f = spec.char_exponent(&y).unwrap().re;
        lifted.update(v, &y).unwrap();
        indyk.update(v, &[f.powf(1.0 / alpha)]).unwrap();
    }
    ks_two_sample(lifted.registers(), indyk.registers()).unwrap().p_value
}

#[test]
fn a08_stable_emulation() {
    let _guard = serial();
    let cases = [
        (
            "stable_spectral",
            ProcessSpec::StableSpectral {
                alpha: 1.5,
                atoms: vec![
                    SpectralAtom { weight: 1.0, direction: vec![1.0, 0.0] },
                    SpectralAtom { weight: 0.7, direction: vec![0.6, -0.8] },
                ],
            },
            1.5,
        ),
        ("lpq(2, 1/2)", ProcessSpec::SubordinatedLpq { p: 2.0, q: 0.5, d: 3 }, 1.0),
        (
            "gaussian 2x2",
            ProcessSpec::Gaussian { covariance: Covariance::Matrix(vec![vec![2.0, 0.6], vec![0.6, 1.0]]) },
            2.0,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, spec, alpha)) in cases.into_iter().enumerate() {
        let p = emulation_p_value(spec, alpha, 0xacc8 + 10 * i as u64);
        pass &= p > 0.01;
        parts.push(format!("{name} p = {p:.3}"));
    }
    verdict(8, "stable emulation", pass, &parts.join("; "));
}

#[test]
fn a09_sampler_calibration() {
    let _guard = serial();
    let n = 1_000_000u64;
    let zs = [0.5, 1.0, 2.0];
    let mut pass = true;
    let mut worst = 0.0f64;
    for (i, alpha) in [0.7, 1.0, 1.5].into_iter().enumerate() {
        let key = OracleKey::new(MasterSeed(0xacc9), i as u64, 0, 0, 0);
        let draws: Vec<f64> = (0..n).map(|c| stable_symmetric(&key, c, alpha).unwrap()).collect();
        for z in zs {
            let est = empirical_cf(&draws, z);
            let target = Complex64::new((-z.powf(alpha)).exp(), 0.0);
            pass &= est.within(target, 3.0);
            worst = worst.max((est.mean - target).norm() / est.std_err);
        }
    }
    for (i, q) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let key = OracleKey::new(MasterSeed(0xacc9), 10 + i as u64, 0, 0, 0);
        let draws: Vec<f64> = (0..n).map(|c| stable_onesided(&key, c, q).unwrap()).collect();
        for z in zs {
            let est = empirical_laplace(&draws, z);
            let dev = (est.mean - (-z.powf(q)).exp()).abs() / est.std_err;
            pass &= dev <= 3.0;
            worst = worst.max(dev);
        }
    }
    verdict(9, "sampler calibration", pass, &format!("largest deviation {worst:.2} standard errors"));
}

#[test]
fn a10_killed_cardinality() {
    let _guard = serial();
    let cardinality = 10_000u64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, coupling) in [Coupling::Hll, Coupling::Pcsa].into_iter().enumerate() {
        let mut within = 0;
        let mut errors = Vec::new();
        for t in 0..100u128 {
            let seed = MasterSeed(0xacca_0000 + 1000 * c as u128 + t);
            let mut sketch = KilledTowerSketch::new(KilledTowerConfig::new(1.0, 20, 2500, seed, coupling).unwrap()).unwrap();
            for v in 0..cardinality {
                sketch.update(v, &[1.0]).unwrap();
            }
            let e = (sketch.estimate().unwrap().estimate.re - cardinality as f64).abs() / cardinality as f64;
            within += usize::from(e <= 0.05);
            errors.push(e);
        }
        pass &= within >= 90;
        parts.push(format!("{coupling:?}: {within}/100 within 5%, median error {:.4}", median(&mut errors)));
    }
    let config = KilledTowerConfig::new(1.0, 20, 64, MasterSeed(1), Coupling::Hll).unwrap();
    let mut sketch = KilledTowerSketch::new(config).unwrap();
    sketch.update(3, &[1.0]).unwrap();
    let rejected = matches!(sketch.update(3, &[-1.0]), Err(Error::DecrementRejected));
    pass &= rejected;
    parts.push(format!("decrement rejected {rejected}"));
    verdict(10, "killed cardinality", pass, &parts.join("; "));
}

#[test]
fn a11_exponent_properties() {
    let _guard = serial();
    let mut s = rng(11);
    let unit = |s: &mut DrawStream| {
        let r = 0.5 * s.next_f64().sqrt();
        Complex64::new(1.0, 0.0) + Complex64::from_polar(r, TAU * s.next_f64())
    };
    let mut lipschitz_ok = true;
    for _ in 0..100_000 {
        let (a, b) = (unit(&mut s), unit(&mut s));
        if (a - 1.0).norm() < 0.5 && (b - 1.0).norm() < 0.5 {
            lipschitz_ok &= (a.ln() - b.ln()).norm() <= 2.0 * (a - b).norm();
        }
    }

    let specs = [
        ProcessSpec::Gaussian { covariance: Covariance::Scalar(1.7) },
        ProcessSpec::Stable1D { alpha: 0.6 },
        ProcessSpec::Stable1D { alpha: 2.0 },
        ProcessSpec::CompoundPoisson {
            jumps: vec![Jump::scalar(1.3, 0.4), Jump::scalar(-1.3, 0.4), Jump::scalar(0.2, 1.0), Jump::scalar(-0.2, 1.0)],
        },
        ProcessSpec::ZpUniform { modulus: 12 },
        ProcessSpec::GnpFinite { w: 6 },
    ];
    let mut nonneg_ok = true;
    let mut growth_ok = true;
    for _ in 0..100_000 {
        let spec = &specs[below(&mut s, specs.len() as u64) as usize];
        let z = if s.next_u64() & 1 == 0 { 20.0 * (s.next_f64() - 0.5) } else { below(&mut s, 200) as f64 - 100.0 };
        let f = spec.char_exponent(&[z]).unwrap().re;
        nonneg_ok &= f >= 0.0;
        let n = below(&mut s, 9) as f64;
        growth_ok &= spec.char_exponent(&[n * z]).unwrap().re <= n * n * f + 1e-9;
    }

    let mut periodic_ok = true;
    for _ in 0..100_000 {
        let modulus = 2 + below(&mut s, 100);
        let spec = ProcessSpec::ZpUniform { modulus };
        let p = modulus as f64;
        let z = if s.next_u64() & 1 == 0 { 200.0 * (s.next_f64() - 0.5) } else { below(&mut s, 400) as f64 - 200.0 };
        let f = |z: f64| spec.char_exponent(&[z]).unwrap().re;
        periodic_ok &= f(p) == 0.0 && f(0.0) == 0.0 && (f(z + p) - f(z)).abs() <= 1e-9;
    }

    let pass = lipschitz_ok && nonneg_ok && growth_ok && periodic_ok;
    verdict(
        11,
        "exponent properties",
        pass,
        &format!("log-lipschitz {lipschitz_ok}, nonnegative {nonneg_ok}, quadratic growth {growth_ok}, periodic zeros {periodic_ok}"),
    );
}
