//! `specest`: synthesize fields, estimate spectra, benchmark the structured
//! inverse.

mod manifest;

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use specest_core::bench::{bench_invert, save_bench_csv};
use specest_core::dual::moment_residual;
use specest_core::estimate::{estimate_spectrum, save_spectrum_csv, EstimateConfig};
use specest_core::field::{synth_field, FieldModel, FieldSamples};
use specest_core::newton::{Method, SolverConfig};
use specest_core::Error;

use manifest::RunManifest;

const THREADS_VAR: &str = "SPECEST_THREADS";

#[derive(Debug, Parser)]
#[command(name = "specest", version, about = "2-D spectral estimation by Newton's method on the dual problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a complex exponential in white Gaussian noise.
    Synth(SynthArgs),
    /// Estimate a spectrum from samples.
    Estimate(EstimateArgs),
    /// Time the structured TBT inverse against dense inversion.
    BenchInvert(BenchArgs),
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    t1: usize,
    #[arg(long, default_value_t = 30)]
    t2: usize,
    /// First coordinate of the planted frequency, in radians.
    #[arg(long, default_value_t = 2.0 * PI * 0.3)]
    freq1: f64,
    #[arg(long, default_value_t = 2.0 * PI * 0.2)]
    freq2: f64,
    /// Amplitude over noise standard deviation.
    #[arg(long, default_value_t = 1.0 / SQRT_2)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "samples.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct EstimateArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 1)]
    n1: usize,
    #[arg(long, default_value_t = 1)]
    n2: usize,
    #[arg(long, default_value_t = 30)]
    grid1: usize,
    #[arg(long, default_value_t = 30)]
    grid2: usize,
    #[arg(long, value_parser = ["full", "quarter"], default_value = "full")]
    method: String,
    /// Gradient-norm stopping threshold.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value = "spectrum.csv")]
    out_spectrum: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    out_trace: PathBuf,
    /// Also write the dual coefficients as `k1,k2,re,im`.
    #[arg(long)]
    out_coeffs: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) => match e {
                Error::Domain(_) | Error::InvalidInput(_) | Error::Io { .. } | Error::Csv { .. } => 2,
                Error::Infeasible { .. } | Error::Numerical(_) => 3,
                Error::NotConverged { .. } | Error::Stagnation { .. } => 4,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = thread_cap().and_then(|threads| {
        specest_core::set_threads(threads);
        run(cli.command, threads)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            if let Failure::Core(e) = &failure {
                if let Some(last) = e.trace().and_then(|t| t.last()) {
                    eprintln!(
                        "last iterate: iter={} objective={:e} grad_norm={:e} step={:e}",
                        last.iter, last.objective, last.grad_norm, last.step
                    );
                }
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

fn thread_cap() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

fn run(command: Command, threads: usize) -> Result<(), Failure> {
    match command {
        Command::Synth(args) => synth(&args, threads),
        Command::Estimate(args) => estimate(&args, threads),
        Command::BenchInvert(args) => bench(&args, threads),
        Command::Replay { manifest } => {
            let m = RunManifest::load(&manifest).map_err(Failure::Usage)?;
            let params = m.params.clone();
            let bad = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", manifest.display()));
            match m.command.as_str() {
                "synth" => synth(&serde_json::from_value(params).map_err(bad)?, threads),
                "estimate" => estimate(&serde_json::from_value(params).map_err(bad)?, threads),
                "bench-invert" => bench(&serde_json::from_value(params).map_err(bad)?, threads),
                other => Err(Failure::Usage(format!("{}: unknown command {other:?}", manifest.display()))),
            }
        }
    }
}

fn write_manifest<T: Serialize>(
    command: &str,
    params: &T,
    seed: Option<u64>,
    outputs: &[&Path],
    threads: usize,
    notes: Vec<String>,
) -> Result<(), Failure> {
    let m = RunManifest::new(command, params, seed, outputs, threads, notes);
    let path = manifest::path_for(outputs[0]);
    m.save(&path).map_err(|e| Failure::Core(Error::Io { path: path.display().to_string(), source: e }))?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn synth(args: &SynthArgs, threads: usize) -> Result<(), Failure> {
    let model = FieldModel::with_ratio((args.freq1, args.freq2), args.ratio, args.seed)?;
    if args.t1 == 0 || args.t2 == 0 {
        return Err(Failure::Usage("--t1 and --t2 must be positive".into()));
    }
    let y = synth_field(&model, args.t1, args.t2)?;
    y.save_csv(&args.out)?;
    println!("wrote {} samples to {}", args.t1 * args.t2, args.out.display());
    write_manifest(
        "synth",
        args,
        Some(args.seed),
        &[&args.out],
        threads,
        vec![format!(
            "amplitude {} noise_std {}; ChaCha8 generator, phase drawn first",
            model.amplitude, model.noise_std
        )],
    )
}

fn estimate(args: &EstimateArgs, threads: usize) -> Result<(), Failure> {
    let method: Method = args.method.parse()?;
    let samples = FieldSamples::load_csv(&args.samples)?;
    let cfg = EstimateConfig {
        n1: args.n1,
        n2: args.n2,
        grid1: args.grid1,
        grid2: args.grid2,
        method,
        solver: SolverConfig {
            grad_tol: args.tol,
            max_iters: args.max_iters,
            ..SolverConfig::default()
        },
    };
    let est = match estimate_spectrum(&samples, &cfg) {
        Ok(est) => est,
        Err(e) => {
            if let Some(trace) = e.trace() {
                trace.save_csv(&args.out_trace)?;
                eprintln!("partial trace written to {}", args.out_trace.display());
            }
            return Err(e.into());
        }
    };
    save_spectrum_csv(&est.phi, &args.out_spectrum)?;
    est.trace.save_csv(&args.out_trace)?;
    let mut outputs: Vec<&Path> = vec![&args.out_spectrum, &args.out_trace];
    if let Some(path) = &args.out_coeffs {
        est.q.save_csv(path)?;
        outputs.push(path);
    }

    let last = est.trace.last().expect("trace has the starting point");
    let (peak, peak_value) = est.phi.argmax();
    let (t1, t2) = est.phi.grid().theta(peak);
    println!(
        "{method} Newton: {} iterations, gradient norm {:e}, {} dual coefficients",
        est.trace.iterations(),
        last.grad_norm,
        est.q.len()
    );
    println!("moment residual {:e}", moment_residual(&est.phi, &est.sigma)?);
    println!("spectral peak {peak_value:.6e} at theta = ({t1:.6}, {t2:.6})");
    write_manifest(
        "estimate",
        args,
        None,
        &outputs,
        threads,
        vec!["dist_to_final is measured against the final iterate of this run".into()],
    )
}

fn bench(args: &BenchArgs, threads: usize) -> Result<(), Failure> {
    if args.n_min == 0 || args.n_max < args.n_min || args.reps == 0 {
        return Err(Failure::Usage("need 1 <= --n-min <= --n-max and --reps >= 1".into()));
    }
    let mut rows = Vec::new();
    for n in args.n_min..=args.n_max {
        let row = bench_invert(n, args.reps, args.seed)?;
        println!(
            "n={:>3} p={:>3} fast {:.3e} s  dense {:.3e} s",
            row.n, row.p, row.fast_s, row.dense_s
        );
        rows.push(row);
    }
    save_bench_csv(&rows, &args.out)?;
    write_manifest(
        "bench-invert",
        args,
        Some(args.seed),
        &[&args.out],
        threads,
        vec![
            "timing columns hold the median wall-clock time of the repetitions, after one untimed warm-up, on a monotonic clock".into(),
            "matrices: uniform random generators with 2*sum|h|+1 added to h_00".into(),
        ],
    )
}
