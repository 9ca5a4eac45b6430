//! `phaseloc`: generate signals and ensembles, take measurements, recover
//! signals, check measurement graphs, and run the benchmark experiments.
//!
//! Exit codes: 0 on success, 1 on any error or a failed lateration check,
//! 2 when recovery stops on collinear anchors.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phaseloc::baselines::{fienup_recover, wirtinger_flow_recover, IterativeOptions};
use phaseloc::bench::{
    run_noise_experiment, run_success_experiment, run_timing_experiment, write_csv, ExperimentConfig, Method,
};
use phaseloc::ensemble::{
    add_noise, apply_intensity, build_complex_full, build_complex_sparse, build_gaussian, build_real_full,
    build_real_sparse,
};
use phaseloc::graph::{graph_from_ensemble, is_lateration};
use phaseloc::recovery::recover_from_measurements;
use phaseloc::signal::{random_signal, random_sparse_signal};
use phaseloc::{Ensemble, EnsembleKind, Error, MeasurementSet, RecoveryOptions, Signal};

#[derive(Parser)]
#[command(name = "phaseloc", version, about = "Phase retrieval by sensor network localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random test signal.
    GenSignal {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of nonzero entries. Dense when omitted.
        #[arg(long)]
        sparsity: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a measurement ensemble.
    Ensemble(EnsembleArgs),
    /// Measure a signal with an ensemble.
    Measure {
        #[arg(long)]
        signal: PathBuf,
        /// A design name, or a path to an ensemble file.
        #[arg(long)]
        ensemble: String,
        /// Measurement count for the Gaussian design.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a signal from stored measurements.
    Recover(RecoverArgs),
    /// Inspect the graph induced by a structured ensemble.
    Graph {
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, value_name = "D")]
        check_lateration: usize,
        /// Comma-separated starting clique, vertex 0 is the origin.
        #[arg(long, value_delimiter = ',')]
        seed_clique: Option<Vec<usize>>,
        /// Write the edge list, one `u v` pair per line.
        #[arg(long)]
        edges_out: Option<PathBuf>,
    },
    /// Run a benchmark experiment and write one CSV row per trial.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Design {
    RealFull,
    RealSparse,
    ComplexFull,
    ComplexSparse,
    Gaussian,
}

impl Design {
    fn parse(name: &str) -> Option<Design> {
        Design::from_str(name, true).ok()
    }
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    kind: Design,
    #[arg(long)]
    n: usize,
    /// Support (1-based, comma-separated) for the sparse designs.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    /// Measurement count for the Gaussian design.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Ours,
    Fienup,
    Wf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    measurements: PathBuf,
    /// Require a sparse acquisition and report its support size.
    #[arg(long)]
    sparse: bool,
    #[arg(long)]
    zero_tol: Option<f64>,
    #[arg(long, value_enum, default_value = "ours")]
    method: Solver,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Success,
    Noise,
    Timing,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    out: PathBuf,
    /// Use the complete dimension grid with 100 trials.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Override the dimension grid.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Override the noise levels.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long)]
    max_iters: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let value = serde_json::from_reader(BufReader::new(file))
        .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    Ok(value)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    Ok(())
}

fn build_design(design: Design, n: usize, support: Option<&[usize]>, m: Option<usize>, seed: u64) -> anyhow::Result<Ensemble> {
    let need_support = || support.context("sparse designs need a support");
    Ok(match design {
        Design::RealFull => build_real_full(n)?,
        Design::ComplexFull => build_complex_full(n)?,
        Design::RealSparse => build_real_sparse(n, need_support()?)?,
        Design::ComplexSparse => build_complex_sparse(n, need_support()?)?,
        Design::Gaussian => build_gaussian(n, m.context("the gaussian design needs --m")?, seed)?,
    })
}

fn support_of(x: &Signal) -> Vec<usize> {
    (1..=x.len()).filter(|&k| x.at(k) != phaseloc::Complex64::new(0.0, 0.0)).collect()
}

fn gen_signal(n: usize, seed: u64, sparsity: Option<usize>, out: &Path) -> anyhow::Result<()> {
    let x = match sparsity {
        Some(s) => random_sparse_signal(n, s, seed)?,
        None => random_signal(n, seed)?,
    };
    write_json(out, &x)?;
    println!("wrote signal n={n} s={} to {}", x.sparsity(), out.display());
    Ok(())
}

fn measure(signal: &Path, ensemble: &str, m: Option<usize>, sigma: f64, seed: u64, out: &Path) -> anyhow::Result<()> {
    let x: Signal = read_json(signal)?;
    let ensemble = match Design::parse(ensemble) {
        Some(design) => {
            let support = support_of(&x);
            build_design(design, x.len(), Some(&support), m, seed)?
        }
        None => read_json(Path::new(ensemble))?,
    };
    let clean = apply_intensity(&Arc::new(ensemble), &x)?;
    let set = add_noise(&clean, sigma, phaseloc::rng::derive_seed(&[seed, 2]))?;
    write_json(out, &set)?;
    println!("wrote {} measurements (sigma={sigma}) to {}", set.values().len(), out.display());
    Ok(())
}

fn recover(args: &RecoverArgs) -> anyhow::Result<()> {
    let set: MeasurementSet = read_json(&args.measurements)?;
    let kind = set.ensemble().kind();
    if args.sparse && !matches!(kind, EnsembleKind::ComplexSparseStage | EnsembleKind::RealSparse) {
        bail!("--sparse expects a sparse acquisition, found a {kind:?} ensemble");
    }
    let xhat = match args.method {
        Solver::Ours => {
            let mut opts = RecoveryOptions::for_noise(set.sigma());
            if let Some(tol) = args.zero_tol {
                opts.zero_tol = tol;
            }
            let rec = recover_from_measurements(&set, &opts)?;
            println!("support size s={} using {} measurements", rec.support.len(), rec.queries);
            if let Some(a) = &rec.anchors {
                println!("anchors: entries {} and {}", a.j1, a.j2);
            }
            rec.signal
        }
        Solver::Fienup | Solver::Wf => {
            let mut opts = IterativeOptions { seed: args.seed, ..Default::default() };
            if let Some(k) = args.max_iters {
                opts.max_iters = k;
            }
            if let Some(step) = args.step {
                opts.step_size = step;
            }
            let result = match args.method {
                Solver::Fienup => fienup_recover(&set, &opts)?,
                _ => wirtinger_flow_recover(&set, &opts)?,
            };
            println!(
                "{} iterations, residual {:.3e}, converged: {}",
                result.iters_used, result.final_residual, result.converged
            );
            result.xhat
        }
    };
    write_json(&args.out, &xhat)?;
    println!("wrote estimate to {}", args.out.display());
    Ok(())
}

/// Returns whether the graph passed the lateration check.
fn graph(ensemble: &Path, d: usize, seed_clique: Option<&[usize]>, edges_out: Option<&Path>) -> anyhow::Result<bool> {
    let ensemble: Ensemble = read_json(ensemble)?;
    let g = graph_from_ensemble(&ensemble)?;
    if let Some(path) = edges_out {
        std::fs::write(path, g.to_edge_list()).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    }
    println!("vertices {} edges {}", g.vertex_count(), g.edges().len());
    match is_lateration(&g, d, seed_clique)? {
        Some(order) => {
            let order: Vec<String> = order.iter().map(usize::to_string).collect();
            println!("{d}-lateration: yes");
            println!("ordering: {}", order.join(" "));
            Ok(true)
        }
        None => {
            println!("{d}-lateration: no");
            Ok(false)
        }
    }
}

fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let mut cfg = if args.full { ExperimentConfig::full() } else { ExperimentConfig::default() };
    cfg.base_seed = args.seed;
    if let Some(k) = args.trials {
        cfg.trials = k;
    }
    if let Some(names) = &args.methods {
        cfg.methods = names.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>()?;
    }
    if let Some(dims) = &args.n {
        match args.experiment {
            Experiment::Noise => cfg.noise_n = *dims.first().context("empty dimension list")?,
            _ => cfg.n_grid = dims.clone(),
        }
    }
    if let Some(sigmas) = &args.sigmas {
        cfg.sigma_grid = sigmas.clone();
    }
    if let Some(k) = args.max_iters {
        cfg.iterative.max_iters = k;
    }
    let records = match args.experiment {
        Experiment::Success => run_success_experiment(&cfg)?,
        Experiment::Noise => run_noise_experiment(&cfg)?,
        Experiment::Timing => run_timing_experiment(&cfg)?,
    };
    write_csv(&records, &args.out)?;
    for method in &cfg.methods {
        let rows: Vec<_> = records.iter().filter(|r| r.method == *method).collect();
        let ok = rows.iter().filter(|r| r.success).count();
        println!("{method}: {ok}/{} successful", rows.len());
    }
    println!("wrote {} trials to {}", records.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::GenSignal { n, seed, sparsity, out } => gen_signal(n, seed, sparsity, &out)?,
        Command::Ensemble(args) => {
            let e = build_design(args.kind, args.n, args.support.as_deref(), args.m, args.seed)?;
            write_json(&args.out, &e)?;
            println!("wrote {} vectors to {}", e.len(), args.out.display());
        }
        Command::Measure { signal, ensemble, m, sigma, seed, out } => measure(&signal, &ensemble, m, sigma, seed, &out)?,
        Command::Recover(args) => recover(&args)?,
        Command::Graph { ensemble, check_lateration, seed_clique, edges_out } => {
            if !graph(&ensemble, check_lateration, seed_clique.as_deref(), edges_out.as_deref())? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench(args) => bench(&args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::CollinearAnchors { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
