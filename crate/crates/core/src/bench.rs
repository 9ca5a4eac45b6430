//! Seeded experiments comparing the closed-form recovery with the iterative
//! baselines, and the raw per-trial CSV they produce.
//!
//! Every trial draws its signal, ensemble and noise from
//! `derive_seed([base_seed, n, method, trial, sigma bits])`, so a trial's data
//! never depends on which other trials run or in what order. Records come
//! back sorted by `(method, n, sigma, trial)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fienup, measurement_matrix, wirtinger_flow, IterativeOptions, MeasurementMatrix};
use crate::ensemble::{add_noise, apply_intensity, build_complex_full, build_gaussian, Ensemble, MeasurementSet};
use crate::recovery::{recover_complex, recover_from_measurements, NoisyOracle, RecoveryOptions};
use crate::rng::derive_seed;
use crate::signal::{random_signal, rel_error_up_to_phase, Signal};
use crate::{Error, Result};

/// Caps the number of worker threads for non-timing experiments.
pub const THREADS_ENV: &str = "PHASELOC_THREADS";

pub const CSV_HEADER: &str = "method,n,m,sigma,trial,seed,rel_error,time_ms,success,error_code";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ours,
    Fienup,
    Wf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::Fienup, Method::Wf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Fienup => "fienup",
            Method::Wf => "wf",
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Method::Ours => 1,
            Method::Fienup => 2,
            Method::Wf => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ours" => Ok(Method::Ours),
            "fienup" => Ok(Method::Fienup),
            "wf" => Ok(Method::Wf),
            other => Err(Error::InvalidOptions(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub success_delta: f64,
    pub base_seed: u64,
    /// Dimension for the noise sweep.
    pub noise_n: usize,
    /// Fienup uses `ceil(fienup_multiplier · n)` Gaussian measurements.
    pub fienup_multiplier: f64,
    /// Wirtinger flow uses `ceil(wf_multiplier · n)` Gaussian measurements.
    pub wf_multiplier: f64,
    pub iterative: IterativeOptions,
    /// A timed trial repeats the recovery until at least this much time has
    /// passed and reports the mean, so microsecond solves still get a usable
    /// reading.
    pub min_timing_ms: f64,
    /// Worker cap. `None` reads [`THREADS_ENV`], then falls back to rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_grid: vec![10, 50, 100, 200],
            sigma_grid: (0..=10).map(|i| i as f64 * 0.005).collect(),
            trials: 50,
            methods: Method::ALL.to_vec(),
            success_delta: 1e-5,
            base_seed: 0,
            noise_n: 100,
            fienup_multiplier: 6.0,
            wf_multiplier: 4.5,
            iterative: IterativeOptions::default(),
            min_timing_ms: 2.0,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// The complete grid with 100 realizations per point.
    pub fn full() -> Self {
        ExperimentConfig { n_grid: vec![10, 50, 100, 150, 200, 250, 300, 350], trials: 100, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptions(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) || self.noise_n == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.sigma_grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigma values must be finite and >= 0".into());
        }
        if !(self.success_delta > 0.0) {
            return bad(format!("success threshold {} must be positive", self.success_delta));
        }
        for mult in [self.fienup_multiplier, self.wf_multiplier] {
            if !(mult >= 1.0 && mult.is_finite()) {
                return bad(format!("measurement multiplier {mult} must be at least 1"));
            }
        }
        if !(self.min_timing_ms >= 0.0 && self.min_timing_ms.is_finite()) {
            return bad("minimum timing window must be finite and >= 0".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        self.iterative.validate()
    }

    /// Measurements each method takes at dimension `n` on noiseless data.
    /// Noisy closed-form trials record the adaptive query count instead.
    pub fn measurement_count(&self, method: Method, n: usize) -> usize {
        match method {
            Method::Ours => (3 * n).saturating_sub(2),
            Method::Fienup => (self.fienup_multiplier * n as f64).ceil() as usize,
            Method::Wf => (self.wf_multiplier * n as f64).ceil() as usize,
        }
    }

    fn worker_count(&self) -> Option<usize> {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
            .filter(|&k| k > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub trial: usize,
    pub seed: u64,
    pub rel_error: f64,
    pub time_ms: f64,
    pub success: bool,
    pub error_code: Option<String>,
}

pub fn trial_seed(base_seed: u64, n: usize, method: Method, trial: usize, sigma: f64) -> u64 {
    derive_seed(&[base_seed, n as u64, method.seed_tag(), trial as u64, sigma.to_bits()])
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    n: usize,
    sigma: f64,
    trial: usize,
}

/// A measured problem, ready for one method's solver.
enum Prepared {
    Ours(MeasurementSet),
    /// Noisy runs of the closed form acquire adaptively, since a `3σ` zero
    /// threshold can move the anchors off the fixed design.
    OursAdaptive { x: Signal, sigma: f64, noise_seed: u64 },
    Iterative { a: MeasurementMatrix, b: Vec<f64> },
}

struct Outcome {
    m: usize,
    rel_error: Result<f64>,
    time_ms: f64,
}

fn prepare(cfg: &ExperimentConfig, job: Job, seed: u64) -> Result<(Signal, Prepared)> {
    let x = random_signal(job.n, seed)?;
    let noise_seed = derive_seed(&[seed, 2]);
    if job.method == Method::Ours && job.sigma > 0.0 {
        return Ok((x.clone(), Prepared::OursAdaptive { x, sigma: job.sigma, noise_seed }));
    }
    let ensemble: Ensemble = match job.method {
        Method::Ours => build_complex_full(job.n)?,
        method => build_gaussian(job.n, cfg.measurement_count(method, job.n), derive_seed(&[seed, 1]))?,
    };
    let set = add_noise(&apply_intensity(&Arc::new(ensemble), &x)?, job.sigma, noise_seed)?;
    let prepared = match job.method {
        Method::Ours => Prepared::Ours(set),
        _ => Prepared::Iterative { a: measurement_matrix(set.ensemble()), b: set.values().to_vec() },
    };
    Ok((x, prepared))
}

/// The estimate and the number of measurements it used.
fn solve(cfg: &ExperimentConfig, method: Method, problem: &Prepared, seed: u64) -> Result<(Signal, usize)> {
    match problem {
        Prepared::Ours(set) => {
            recover_from_measurements(set, &RecoveryOptions::default()).map(|r| (r.signal, set.values().len()))
        }
        Prepared::OursAdaptive { x, sigma, noise_seed } => {
            let oracle = NoisyOracle::new(x, *sigma, *noise_seed)?;
            recover_complex(&oracle, &RecoveryOptions::for_noise(*sigma)).map(|r| (r.signal, r.queries))
        }
        Prepared::Iterative { a, b } => {
            let opts = IterativeOptions { seed: derive_seed(&[seed, 3]), ..cfg.iterative.clone() };
            let result = if method == Method::Fienup { fienup(a, b, &opts) } else { wirtinger_flow(a, b, &opts) };
            result.map(|r| (r.xhat, b.len()))
        }
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    method: Method,
    problem: &Prepared,
    seed: u64,
    repeat: bool,
) -> (Result<(Signal, usize)>, f64) {
    let start = Instant::now();
    let first = solve(cfg, method, problem, seed);
    let mut runs = 1u32;
    if repeat {
        while start.elapsed().as_secs_f64() * 1e3 < cfg.min_timing_ms {
            let _ = std::hint::black_box(solve(cfg, method, problem, seed));
            runs += 1;
        }
    }
    (first, start.elapsed().as_secs_f64() * 1e3 / f64::from(runs))
}

fn execute(cfg: &ExperimentConfig, job: Job, seed: u64, repeat: bool) -> Outcome {
    let nominal = cfg.measurement_count(job.method, job.n);
    match prepare(cfg, job, seed) {
        Ok((x, problem)) => {
            let (solved, time_ms) = run_one(cfg, job.method, &problem, seed, repeat);
            match solved {
                Ok((xhat, m)) => Outcome { m, rel_error: rel_error_up_to_phase(&x, &xhat), time_ms },
                Err(e) => Outcome { m: nominal, rel_error: Err(e), time_ms },
            }
        }
        Err(e) => Outcome { m: nominal, rel_error: Err(e), time_ms: 0.0 },
    }
}

/// Failed solves count as the zero estimate, whose error is 1.
fn record(cfg: &ExperimentConfig, job: Job, repeat: bool) -> TrialRecord {
    let seed = trial_seed(cfg.base_seed, job.n, job.method, job.trial, job.sigma);
    let outcome = execute(cfg, job, seed, repeat);
    let (rel_error, error_code) = match outcome.rel_error {
        Ok(delta) if delta.is_finite() => (delta, None),
        Ok(_) => (1.0, Some("non-finite".to_string())),
        Err(e) => (1.0, Some(e.code().to_string())),
    };
    TrialRecord {
        method: job.method,
        n: job.n,
        m: outcome.m,
        sigma: job.sigma,
        trial: job.trial,
        seed,
        rel_error,
        time_ms: outcome.time_ms,
        success: rel_error <= cfg.success_delta,
        error_code,
    }
}

fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        (a.method, a.n).cmp(&(b.method, b.n)).then(a.sigma.total_cmp(&b.sigma)).then(a.trial.cmp(&b.trial))
    });
}

fn run_parallel(cfg: &ExperimentConfig, jobs: Vec<Job>) -> Result<Vec<TrialRecord>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.worker_count() {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidOptions(format!("worker pool: {e}")))?;
    let mut records: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(|&job| record(cfg, job, false)).collect());
    sort_records(&mut records);
    Ok(records)
}

fn grid_jobs(cfg: &ExperimentConfig, dims: &[usize], sigmas: &[f64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &n in dims {
            for &sigma in sigmas {
                for trial in 0..cfg.trials {
                    jobs.push(Job { method, n, sigma, trial });
                }
            }
        }
    }
    jobs
}

/// Noiseless recovery over the dimension grid.
pub fn run_success_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    run_parallel(cfg, grid_jobs(cfg, &cfg.n_grid, &[0.0]))
}

/// Sweep of the noise level at dimension `noise_n`.
pub fn run_noise_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    run_parallel(cfg, grid_jobs(cfg, &[cfg.noise_n], &cfg.sigma_grid))
}

/// Noiseless wall-clock times, run sequentially. Each `(method, n)` group
/// starts with one discarded warm-up solve.
pub fn run_timing_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.n_grid {
            let warm_up = Job { method, n, sigma: 0.0, trial: usize::MAX };
            let _ = record(cfg, warm_up, false);
            for trial in 0..cfg.trials {
                records.push(record(cfg, Job { method, n, sigma: 0.0, trial }, true));
            }
        }
    }
    sort_records(&mut records);
    Ok(records)
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let csv_err = |e: csv::Error| Error::Csv { path: path.to_path_buf(), line: 0, message: e.to_string() };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::BufWriter::new(file));
    writer.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for rec in records {
        writer.serialize(rec).map_err(csv_err)?;
    }
    writer.flush().map_err(io_err)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let line_of = |e: &csv::Error| e.position().map_or(0, |p| p.line());
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), line: line_of(&e), message: e.to_string() })?
        .clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Csv { path: path.to_path_buf(), line: 1, message: format!("expected header '{CSV_HEADER}'") });
    }
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| Error::Csv { path: path.to_path_buf(), line: line_of(&e), message: e.to_string() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &[Method]) -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![4, 9],
            sigma_grid: vec![0.0, 0.05],
            trials: 3,
            methods: methods.to_vec(),
            noise_n: 12,
            iterative: IterativeOptions { max_iters: 200, ..Default::default() },
            min_timing_ms: 0.0,
            threads: Some(1),
            ..Default::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.n_grid, vec![10, 50, 100, 200]);
        assert_eq!(cfg.sigma_grid.len(), 11);
        assert!((cfg.sigma_grid[10] - 0.05).abs() < 1e-15);
        assert_eq!(cfg.trials, 50);
        assert_eq!(cfg.success_delta, 1e-5);
        assert_eq!(ExperimentConfig::full().n_grid, vec![10, 50, 100, 150, 200, 250, 300, 350]);
        assert_eq!(cfg.measurement_count(Method::Ours, 10), 28);
        assert_eq!(cfg.measurement_count(Method::Fienup, 10), 60);
        assert_eq!(cfg.measurement_count(Method::Wf, 11), 50);
    }

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::default();
        for bad in [
            ExperimentConfig { trials: 0, ..ok.clone() },
            ExperimentConfig { methods: vec![], ..ok.clone() },
            ExperimentConfig { success_delta: 0.0, ..ok.clone() },
            ExperimentConfig { sigma_grid: vec![-0.1], ..ok.clone() },
            ExperimentConfig { wf_multiplier: 0.5, ..ok.clone() },
            ExperimentConfig { n_grid: vec![0], ..ok.clone() },
            ExperimentConfig { threads: Some(0), ..ok.clone() },
        ] {
            assert!(matches!(run_success_experiment(&bad), Err(Error::InvalidOptions(_))));
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("phasecut".parse::<Method>().is_err());
    }

    #[test]
    fn success_records_are_sorted_and_consistent() {
        let cfg = small(&Method::ALL);
        let recs = run_success_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 3 * 2 * 3);
        let mut sorted = recs.clone();
        sort_records(&mut sorted);
        assert_eq!(recs, sorted);
        for r in &recs {
            assert_eq!(r.success, r.rel_error <= cfg.success_delta);
            assert_eq!(r.m, cfg.measurement_count(r.method, r.n));
            assert_eq!(r.sigma, 0.0);
            if r.method == Method::Ours {
                assert!(r.success && r.rel_error <= 1e-9 && r.error_code.is_none());
            }
        }
    }

    #[test]
    fn trials_do_not_depend_on_other_methods_or_threads() {
        let alone = run_success_experiment(&small(&[Method::Fienup])).unwrap();
        let mut with_all = ExperimentConfig { threads: Some(3), ..small(&Method::ALL) };
        with_all.methods.reverse();
        let together = run_success_experiment(&with_all).unwrap();
        let fienup: Vec<_> = together.into_iter().filter(|r| r.method == Method::Fienup).collect();
        let strip = |rs: Vec<TrialRecord>| rs.into_iter().map(|r| TrialRecord { time_ms: 0.0, ..r }).collect::<Vec<_>>();
        assert_eq!(strip(alone), strip(fienup));
    }

    #[test]
    fn noise_sweep() {
        let cfg = small(&[Method::Ours]);
        let recs = run_noise_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 3);
        assert!(recs.iter().all(|r| r.n == 12));
        for r in recs.iter().filter(|r| r.sigma == 0.0) {
            assert!(r.rel_error <= 1e-9);
        }
        let noisy: Vec<_> = recs.iter().filter(|r| r.sigma == 0.05).collect();
        assert!(noisy.iter().all(|r| r.m <= cfg.measurement_count(Method::Ours, 12)));
        assert!(noisy.iter().map(|r| r.rel_error).sum::<f64>() / noisy.len() as f64 > 0.0);
    }

    #[test]
    fn timing_fields_are_positive() {
        let cfg = ExperimentConfig { min_timing_ms: 0.5, ..small(&Method::ALL) };
        let recs = run_timing_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 3 * 2 * 3);
        assert!(recs.iter().all(|r| r.time_ms.is_finite() && r.time_ms > 0.0));
        assert!(recs.iter().all(|r| r.trial < cfg.trials));
    }

    #[test]
    fn failed_solves_are_recorded() {
        // Dimension one cannot carry the two-anchor design.
        let cfg = ExperimentConfig { n_grid: vec![1], ..small(&[Method::Ours]) };
        let recs = run_success_experiment(&cfg).unwrap();
        for r in recs {
            assert!(!r.success);
            assert_eq!(r.rel_error, 1.0);
            assert_eq!(r.error_code.as_deref(), Some("dimension-too-small"));
        }
    }
}
