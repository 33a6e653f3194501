//! `suffreduce`: covariance ingestion, single-linkage clustering and
//! thresholding, estimator solves with optional block decomposition,
//! verification suites and decomposition benchmarks.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use suffreduce::estimators::{self, EstimatorSpec, Family, SolveReport, SolverOptions};
use suffreduce::io::{self, DEFAULT_ASYM_TOL};
use suffreduce::linkage::{cut_dendrogram, mst_kruskal, slt, slt_plus};
use suffreduce::reduce::Input;
use suffreduce::symmat::uncentered_covariance;
use suffreduce::verify::{self, Suite, SuiteConfig, Summary};
use suffreduce::{Error, SymMatrix};

#[derive(Parser)]
#[command(name = "suffreduce", version, about = "Sufficient reductions for penalized covariance estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct MatrixInput {
    /// Square symmetric matrix CSV.
    input: PathBuf,
    /// Skip one header row.
    #[arg(long)]
    header: bool,
    /// Largest tolerated |X_ij - X_ji|.
    #[arg(long, default_value_t = DEFAULT_ASYM_TOL)]
    asym_tol: f64,
}

impl MatrixInput {
    fn read(&self) -> Result<SymMatrix, Failure> {
        io::read_matrix_file(&self.input, self.header, self.asym_tol).map_err(Failure::usage)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Uncentered covariance of a vote matrix (rows are roll calls).
    Cov {
        votes: PathBuf,
        #[arg(short, long, default_value = "matrix.csv")]
        output: PathBuf,
        #[arg(long)]
        header: bool,
        /// Accept arbitrary real entries instead of -1/0/+1.
        #[arg(long)]
        general: bool,
    },
    /// Single-linkage dendrogram of |X|, and the cluster matrix at a cut.
    Cluster {
        #[command(flatten)]
        matrix: MatrixInput,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value = "dendrogram.json")]
        dendrogram: PathBuf,
        #[arg(long, default_value = "clusters.csv")]
        clusters: PathBuf,
    },
    /// Single-linkage thresholding of X.
    Threshold {
        #[command(flatten)]
        matrix: MatrixInput,
        /// Required for `slt`; ignored for `slt-plus`.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = ThresholdMode::Slt)]
        mode: ThresholdMode,
        #[arg(short, long, default_value = "thresholded.csv")]
        output: PathBuf,
    },
    /// Run an estimator, optionally on the reduced and block-decomposed input.
    Solve {
        #[command(flatten)]
        matrix: MatrixInput,
        /// glasso, fps, sparsecov, posinvcov, ising, lasso or nnls.
        #[arg(long)]
        estimator: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = Switch::Off)]
        decompose: Switch,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(short, long, default_value = "estimate.csv")]
        output: PathBuf,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Randomized verification suites.
    Verify {
        /// sufficiency, minimality, orbitope, all, or corrupted (negative control).
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
        sizes: Vec<usize>,
        /// Restrict the sufficiency suite to these estimators.
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        #[arg(short, long, default_value = "summary.json")]
        output: PathBuf,
    },
    /// Direct versus decomposed solve on a planted block-diagonal instance.
    Bench {
        #[arg(long, default_value = "glasso")]
        estimator: String,
        #[arg(long, default_value_t = 200)]
        p: usize,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        /// Defaults to just above the largest cross-block entry.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long, default_value = "bench.json")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdMode {
    Slt,
    SltPlus,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Switch {
    On,
    Off,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    fn solver(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } | Error::Infeasible(_) | Error::DimensionLimit { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cov { votes, output, header, general } => cov(&votes, &output, header, general),
        Command::Cluster { matrix, lambda, dendrogram, clusters } => cluster(&matrix, lambda, &dendrogram, &clusters),
        Command::Threshold { matrix, lambda, mode, output } => threshold(&matrix, lambda, mode, &output),
        Command::Solve {
            matrix,
            estimator,
            lambda,
            k,
            eps,
            decompose,
            tol,
            max_iter,
            output,
            report,
        } => {
            let mut opts = SolverOptions::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            if let Some(m) = max_iter {
                opts.max_iter = m;
            }
            solve(&matrix, &estimator, lambda, k, eps, decompose == Switch::On, opts, &output, &report)
        }
        Command::Verify { suite, seed, sizes, families, output } => run_verify(&suite, seed, sizes, families, &output),
        Command::Bench { estimator, p, blocks, lambda, seed, output } => bench(&estimator, p, blocks, lambda, seed, &output),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cov(votes: &Path, output: &Path, header: bool, general: bool) -> Result<u8, Failure> {
    let rows = io::read_votes_file(votes, header, general).map_err(Failure::usage)?;
    let x = uncentered_covariance(&rows).map_err(Failure::usage)?;
    io::write_matrix_file(output, &x).map_err(Failure::usage)?;
    Ok(0)
}

fn cluster(matrix: &MatrixInput, lambda: Option<f64>, dendrogram: &Path, clusters: &Path) -> Result<u8, Failure> {
    let x = matrix.read()?;
    if let Some(l) = lambda {
        if l.is_nan() || l < 0.0 {
            return Err(Failure::usage(format!("--lambda must be >= 0, got {l}")));
        }
    }
    let d = mst_kruskal(&x);
    io::write_json_file(dendrogram, &d).map_err(Failure::usage)?;
    if let Some(l) = lambda {
        let part = cut_dendrogram(&d, l).map_err(Failure::usage)?;
        io::write_binary_matrix_file(clusters, &part.cluster_matrix()).map_err(Failure::usage)?;
        let blocks: Vec<String> = part
            .blocks()
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        println!("{} clusters: {}", part.num_blocks(), blocks.join(" "));
    }
    Ok(0)
}

fn threshold(matrix: &MatrixInput, lambda: Option<f64>, mode: ThresholdMode, output: &Path) -> Result<u8, Failure> {
    let x = matrix.read()?;
    let out = match mode {
        ThresholdMode::Slt => {
            let l = lambda.ok_or_else(|| Failure::usage("--lambda is required for slt"))?;
            slt(&x, l).map_err(Failure::usage)?
        }
        ThresholdMode::SltPlus => slt_plus(&x),
    };
    io::write_matrix_file(output, &out).map_err(Failure::usage)?;
    Ok(0)
}

fn build_spec(name: &str, lambda: f64, k: Option<usize>, eps: Option<f64>, p: usize) -> Result<EstimatorSpec, Failure> {
    let family = Family::from_name(name).ok_or_else(|| Failure::usage(format!("unknown estimator {name:?}")))?;
    let mut spec = match family {
        Family::Lasso => EstimatorSpec::lasso(vec![lambda; p]),
        Family::Nnls => EstimatorSpec::nnls(),
        Family::GraphicalLasso => EstimatorSpec::glasso(lambda),
        Family::FantopeSpca => EstimatorSpec::fantope(lambda, k.unwrap_or(1)),
        Family::SparseCovariance => EstimatorSpec::sparse_cov(lambda, eps.unwrap_or(0.01)),
        Family::PositiveInvCov => EstimatorSpec::positive_invcov(),
        Family::IsingPmle => EstimatorSpec::ising(lambda),
    };
    if family == Family::SparseCovariance {
        spec.eps = Some(eps.unwrap_or(0.01));
    }
    spec.validate().map_err(Failure::usage)?;
    Ok(spec)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    matrix: &MatrixInput,
    estimator: &str,
    lambda: f64,
    k: Option<usize>,
    eps: Option<f64>,
    decompose: bool,
    opts: SolverOptions,
    output: &Path,
    report_path: &Path,
) -> Result<u8, Failure> {
    let family = Family::from_name(estimator).ok_or_else(|| Failure::usage(format!("unknown estimator {estimator:?}")))?;
    let report = if family.is_matrix() {
        let x = matrix.read()?;
        let spec = build_spec(estimator, lambda, k, eps, x.dim())?.with_options(opts);
        if decompose {
            estimators::solve_decomposed(&spec, &x)
        } else {
            estimators::solve(&spec, &Input::Matrix(x))
        }
        .map_err(Failure::solver)?
    } else {
        // vector estimators read every cell of the file in row order
        let file = std::fs::File::open(&matrix.input).map_err(Failure::usage)?;
        let v: Vec<f64> = io::read_rows(file, matrix.header).map_err(Failure::usage)?.concat();
        if v.is_empty() {
            return Err(Failure::usage("empty input vector"));
        }
        let spec = build_spec(estimator, lambda, k, eps, v.len())?;
        estimators::solve(&spec, &Input::Vector(v)).map_err(Failure::solver)?
    };
    write_estimate(output, &report)?;
    io::write_json_file(report_path, &report).map_err(Failure::usage)?;
    println!(
        "{estimator}: objective {:.10e}, {} iterations, residual {:.2e}{}",
        report.objective,
        report.iterations,
        report.kkt_residual,
        report.blocks.as_ref().map_or(String::new(), |b| format!(", {} blocks", b.len()))
    );
    Ok(0)
}

fn write_estimate(path: &Path, report: &SolveReport) -> Result<(), Failure> {
    match &report.theta {
        Input::Matrix(m) => io::write_matrix_file(path, m).map_err(Failure::usage),
        Input::Vector(v) => {
            let line: Vec<String> = v.iter().map(|&a| io::format_value(a)).collect();
            std::fs::write(path, line.join(",") + "\n").map_err(Failure::usage)
        }
    }
}

fn run_verify(suite: &str, seed: u64, sizes: Vec<usize>, families: Option<Vec<String>>, output: &Path) -> Result<u8, Failure> {
    let summary: Summary = if suite == "corrupted" {
        verify::run_corrupted_control(seed, &sizes)
    } else {
        let suites = Suite::from_name(suite).ok_or_else(|| {
            Failure::usage(format!(
                "unknown suite {suite:?}; expected sufficiency, minimality, orbitope, all or corrupted"
            ))
        })?;
        let families = match families {
            Some(names) => names
                .iter()
                .map(|n| Family::from_name(n).ok_or_else(|| Failure::usage(format!("unknown estimator {n:?}"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![
                Family::Lasso,
                Family::Nnls,
                Family::GraphicalLasso,
                Family::FantopeSpca,
                Family::SparseCovariance,
                Family::PositiveInvCov,
                Family::IsingPmle,
            ],
        };
        let mut cfg = SuiteConfig::new(seed, sizes, families);
        cfg.suites = suites;
        verify::run_suites(&cfg)
    };
    io::write_json_file(output, &summary).map_err(Failure::usage)?;
    println!("{} trials, {} failures", summary.trials, summary.failures.len());
    for f in summary.failures.iter().take(10) {
        println!("  {:?} {} p={}: {}", f.suite, f.check, f.p, f.detail);
    }
    Ok(if summary.passed() { 0 } else { 1 })
}

#[derive(Serialize)]
struct BenchReport {
    estimator: String,
    p: usize,
    blocks_planted: usize,
    blocks_found: usize,
    lambda: f64,
    seed: u64,
    direct_seconds: f64,
    decomposed_seconds: f64,
    speedup: f64,
    max_deviation: f64,
    equal_within_1e5: bool,
    threads: Option<String>,
}

fn bench(estimator: &str, p: usize, blocks: usize, lambda: Option<f64>, seed: u64, output: &Path) -> Result<u8, Failure> {
    if estimator != "glasso" {
        return Err(Failure::usage(format!("bench supports only glasso, got {estimator:?}")));
    }
    if p == 0 || blocks == 0 || blocks > p {
        return Err(Failure::usage("bench needs p >= blocks >= 1"));
    }
    let (x, planted, auto) = verify::planted_benchmark(seed, p, blocks);
    let lambda = lambda.unwrap_or(auto);
    let spec = build_spec("glasso", lambda, None, None, p)?;
    let t = Instant::now();
    let direct = estimators::solve(&spec, &Input::Matrix(x.clone())).map_err(Failure::solver)?;
    let direct_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let decomposed = estimators::solve_decomposed(&spec, &x).map_err(Failure::solver)?;
    let decomposed_seconds = t.elapsed().as_secs_f64();
    let max_deviation = direct
        .theta_matrix()
        .and_then(|a| decomposed.theta_matrix().map(|b| a.max_abs_diff(b)))
        .expect("matrix estimates")
        .map_err(Failure::solver)?;
    let report = BenchReport {
        estimator: estimator.to_string(),
        p,
        blocks_planted: planted.num_blocks(),
        blocks_found: decomposed.blocks.as_ref().map_or(1, |b| b.len()),
        lambda,
        seed,
        direct_seconds,
        decomposed_seconds,
        speedup: direct_seconds / decomposed_seconds.max(1e-9),
        max_deviation,
        equal_within_1e5: max_deviation <= 1e-5,
        threads: std::env::var("SUFFREDUCE_THREADS").ok(),
    };
    io::write_json_file(output, &report).map_err(Failure::usage)?;
    println!(
        "direct {:.3}s, decomposed {:.3}s, speedup {:.1}x, deviation {:.2e}",
        direct_seconds, decomposed_seconds, report.speedup, max_deviation
    );
    Ok(if report.equal_within_1e5 { 0 } else { 1 })
}
