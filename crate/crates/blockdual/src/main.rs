//! Command-line front end: load LIBSVM data, run one solver or a set of
//! them on shared data, and emit CSV traces plus a plain-text summary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blockdual::cluster::TimeModel;
use blockdual::dataio::{parse_libsvm, shuffle_columns, LabelVector, SparseColumnMatrix};
use blockdual::engine::{
    rel_dual_gap, rel_primal_gap, write_trace_csv, Algo, SolveOutput, Solver, SolverConfig,
    TraceRecord,
};
use blockdual::model::{LossKind, LossSpec};
use blockdual::oracle::reference_optimum;
use blockdual::{Error, Result};

#[derive(Parser)]
#[command(name = "blockdual", version, about = "Distributed dual ERM solver (simulated cluster)")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one solver configuration and write its trace.
    Run(RunArgs),
    /// Run several algorithms on shared data and summarize rounds-to-gap.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    #[value(name = "l1-svm")]
    L1Svm,
    #[value(name = "l2-svm")]
    L2Svm,
    #[value(name = "logistic")]
    Logistic,
    #[value(name = "svr")]
    Svr,
    #[value(name = "l2-svr")]
    L2Svr,
    #[value(name = "lsq")]
    Lsq,
}

impl From<LossArg> for LossKind {
    fn from(a: LossArg) -> LossKind {
        match a {
            LossArg::L1Svm => LossKind::L1Svm,
            LossArg::L2Svm => LossKind::L2Svm,
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Svr => LossKind::Svr,
            LossArg::L2Svr => LossKind::L2Svr,
            LossArg::Lsq => LossKind::LeastSquares,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    #[value(name = "bda-exact-ls")]
    BdaExactLs,
    #[value(name = "bda-backtrack")]
    BdaBacktrack,
    #[value(name = "disdca", alias = "disdca-practical")]
    Disdca,
    #[value(name = "dsvm-ave")]
    DsvmAve,
    #[value(name = "proxgrad", alias = "prox-grad")]
    ProxGrad,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::BdaExactLs => Algo::BdaExactLs,
            AlgoArg::BdaBacktrack => Algo::BdaBacktrack,
            AlgoArg::Disdca => Algo::DisdcaPractical,
            AlgoArg::DsvmAve => Algo::DsvmAve,
            AlgoArg::ProxGrad => Algo::ProxGrad,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    loss: LossArg,
    /// Loss weight C.
    #[arg(long = "C")]
    c: f64,
    /// Insensitivity width for the SVR losses.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Number of simulated workers.
    #[arg(long = "K", default_value_t = 1)]
    k: usize,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// Armijo sufficient-decrease fraction.
    #[arg(long)]
    tau: Option<f64>,
    /// Backtracking shrink factor.
    #[arg(long)]
    beta: Option<f64>,
    /// RPCD passes per outer iteration.
    #[arg(long = "local-epochs")]
    local_epochs: Option<usize>,
    /// Stop when the duality gap falls below this fraction of the initial gap.
    #[arg(long = "stop-eps")]
    stop_eps: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Permute instances with the seeded RNG before partitioning.
    #[arg(long)]
    shuffle: bool,
    /// Output CSV trace path.
    #[arg(long)]
    trace: PathBuf,
    /// File holding the optimal dual objective (single number); enables
    /// relative-suboptimality reporting.
    #[arg(long)]
    fstar: Option<PathBuf>,
    /// Per-round latency (seconds) of the simulated-time cost model.
    #[arg(long)]
    latency: Option<f64>,
    /// Bandwidth (bytes/second) of the simulated-time cost model.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Held-out data; reports 0/1 accuracy (classification) or mean squared
    /// error (regression) of the pocket solution.
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: AlgoArg,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated list of algorithms to run on the shared data.
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<AlgoArg>,
    /// Relative dual gap defining "reached the target".
    #[arg(long = "target-gap", default_value_t = 1e-4)]
    target_gap: f64,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Run(args) => run_cmd(args),
        Cmd::Compare(args) => compare_cmd(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Loaded {
    matrix: SparseColumnMatrix,
    labels: LabelVector,
    loss: LossSpec,
    time_model: TimeModel,
}

fn load(common: &CommonArgs) -> Result<Loaded> {
    let loss = LossSpec::new(common.loss.into(), common.c).with_eps(common.eps);
    loss.validate()?;
    let file = File::open(&common.data)?;
    let (labels, matrix) = parse_libsvm(BufReader::new(file))?;
    loss.validate_labels(labels.as_slice())?;
    let (matrix, labels) = if common.shuffle {
        shuffle_columns(matrix, labels, common.seed)
    } else {
        (matrix, labels)
    };
    let bandwidth = common.bandwidth.unwrap_or(f64::INFINITY);
    if bandwidth.is_nan() || bandwidth <= 0.0 {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let latency = common.latency.unwrap_or(0.0);
    if latency.is_nan() || latency < 0.0 {
        return Err(Error::Config(format!("latency must be non-negative, got {latency}")));
    }
    Ok(Loaded {
        matrix,
        labels,
        loss,
        time_model: TimeModel { latency, bandwidth },
    })
}

fn build_config(common: &CommonArgs, algo: Algo, loaded: &Loaded) -> Result<SolverConfig> {
    let mut config = SolverConfig::for_algo(algo, common.k, &loaded.loss, Some(&loaded.matrix))?;
    if let Some(x) = common.a1 {
        config.a1 = x;
    }
    if let Some(x) = common.a2 {
        config.a2 = x;
    }
    if let Some(x) = common.tau {
        config.tau = x;
    }
    if let Some(x) = common.beta {
        config.beta = x;
    }
    if let Some(x) = common.local_epochs {
        config.local_epochs = x;
    }
    if let Some(x) = common.stop_eps {
        config.stop_eps = x;
    }
    if let Some(x) = common.max_iter {
        config.max_iter = x;
    }
    config.seed = common.seed;
    Ok(config)
}

fn read_fstar(path: &Path) -> Result<f64> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    text.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: expected a single number", path.display())))
}

fn write_trace(path: &Path, records: &[TraceRecord], f_star: Option<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trace_csv(&mut out, records, f_star)?;
    out.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ConfigEcho<'a> {
    data: String,
    #[serde(flatten)]
    loss: &'a LossSpec,
    shuffle: bool,
    #[serde(flatten)]
    config: &'a SolverConfig,
    latency: f64,
    bandwidth: f64,
}

fn write_config_echo(
    common: &CommonArgs,
    loss: &LossSpec,
    config: &SolverConfig,
    trace_path: &Path,
) -> Result<()> {
    let echo = ConfigEcho {
        data: common.data.display().to_string(),
        loss,
        shuffle: common.shuffle,
        config,
        latency: common.latency.unwrap_or(0.0),
        bandwidth: common.bandwidth.unwrap_or(f64::INFINITY),
    };
    let path = config_echo_path(trace_path);
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &echo)
        .map_err(|e| Error::Config(format!("config echo: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn config_echo_path(trace_path: &Path) -> PathBuf {
    let mut s = trace_path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Trace path for one algorithm of a comparison: `stem.algo.ext`.
fn per_algo_trace_path(base: &Path, algo: Algo) -> PathBuf {
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{}.{}", algo.name(), ext.to_string_lossy()),
        None => format!("{stem}.{}", algo.name()),
    };
    base.with_file_name(name)
}

fn report_test_metrics(path: &Path, weights: &[f64], loss: &LossSpec) -> Result<()> {
    let file = File::open(path)?;
    let (labels, matrix) = parse_libsvm(BufReader::new(file))?;
    if labels.is_empty() {
        return Err(Error::Config(format!("{}: empty test set", path.display())));
    }
    let score = |j: usize| -> f64 {
        matrix
            .column(j)
            .iter()
            .filter(|&&(i, _)| i < weights.len())
            .map(|&(i, x)| x * weights[i])
            .sum()
    };
    if loss.kind.is_classification() {
        loss.validate_labels(labels.as_slice())?;
        let correct = (0..labels.len())
            .filter(|&j| {
                let pred = if score(j) >= 0.0 { 1.0 } else { -1.0 };
                pred == labels.as_slice()[j]
            })
            .count();
        println!("test_accuracy: {}", correct as f64 / labels.len() as f64);
    } else {
        let mse = (0..labels.len())
            .map(|j| {
                let d = score(j) - labels.as_slice()[j];
                d * d
            })
            .sum::<f64>()
            / labels.len() as f64;
        println!("test_mse: {mse}");
    }
    Ok(())
}

fn run_one(loaded: &Loaded, config: &SolverConfig) -> Result<SolveOutput> {
    Solver::with_time_model(
        &loaded.matrix,
        loaded.labels.as_slice(),
        loaded.loss,
        *config,
        Some(loaded.time_model),
    )?
    .solve()
}

fn run_cmd(args: RunArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let config = build_config(&args.common, args.algo.into(), &loaded)?;
    let out = run_one(&loaded, &config)?;

    let f_star = args.common.fstar.as_deref().map(read_fstar).transpose()?;
    write_trace(&args.common.trace, &out.trace, f_star)?;
    write_config_echo(&args.common, &loaded.loss, &config, &args.common.trace)?;

    println!("algo: {}", config.algo.name());
    println!("converged: {}", out.converged);
    println!("iterations: {}", out.iterations);
    println!("f_dual: {}", out.final_dual);
    println!("f_primal_pocket: {}", out.pocket_primal);
    println!("rounds: {}", out.stats.rounds_total());
    println!("bytes: {}", out.stats.bytes_total);
    if let Some(fs) = f_star {
        let last = out.trace.last().expect("trace is never empty");
        println!("rel_dual: {}", rel_dual_gap(last.f_dual, fs));
        println!("rel_primal: {}", rel_primal_gap(last.f_primal, fs));
    }
    if let Some(test_path) = &args.common.test {
        report_test_metrics(test_path, &out.weights, &loaded.loss)?;
    }
    Ok(if out.converged { 0 } else { 2 })
}

fn rounds_to_gap(trace: &[TraceRecord], f_star: f64, target: f64) -> Option<u64> {
    trace
        .iter()
        .find(|r| rel_dual_gap(r.f_dual, f_star) <= target)
        .map(|r| r.rounds)
}

fn compare_cmd(args: CompareArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let f_star = match args.common.fstar.as_deref() {
        Some(path) => read_fstar(path)?,
        None => reference_optimum(
            &loaded.matrix,
            loaded.labels.as_slice(),
            &loaded.loss,
            1e-10,
        )?,
    };

    struct Row {
        algo: Algo,
        rounds_to_gap: Option<u64>,
        iterations: u64,
        converged: bool,
        final_dual: f64,
        rel_dual: f64,
    }
    let mut rows = Vec::new();
    for &algo_arg in &args.algos {
        let algo: Algo = algo_arg.into();
        let config = build_config(&args.common, algo, &loaded)?;
        let out = run_one(&loaded, &config)?;
        let trace_path = per_algo_trace_path(&args.common.trace, algo);
        write_trace(&trace_path, &out.trace, Some(f_star))?;
        write_config_echo(&args.common, &loaded.loss, &config, &trace_path)?;
        rows.push(Row {
            algo,
            rounds_to_gap: rounds_to_gap(&out.trace, f_star, args.target_gap),
            iterations: out.iterations,
            converged: out.converged,
            final_dual: out.final_dual,
            rel_dual: rel_dual_gap(out.final_dual, f_star),
        });
    }
    rows.sort_by_key(|r| r.rounds_to_gap.unwrap_or(u64::MAX));

    println!("f_star: {f_star}");
    println!("target_gap: {}", args.target_gap);
    println!(
        "{:<18} {:>14} {:>11} {:>22} {:>12}",
        "algo", "rounds_to_gap", "iterations", "f_dual", "rel_dual"
    );
    for r in &rows {
        let reached = r
            .rounds_to_gap
            .map_or_else(|| "-".to_string(), |x| x.to_string());
        println!(
            "{:<18} {:>14} {:>11} {:>22} {:>12.3e}",
            r.algo.name(),
            reached,
            r.iterations,
            r.final_dual,
            r.rel_dual
        );
    }
    Ok(if rows.iter().all(|r| r.converged) { 0 } else { 2 })
}
