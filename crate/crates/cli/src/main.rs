//! Command-line interface: end-to-end clustering runs, salient-chain
//! extraction, and the FindChain-vs-brute-force timing benchmark.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible configuration,
//! 1 anything else.

mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ss_shapelets::chain::{brute_force_chain, find_chain, ChainError};
use ss_shapelets::dataset::{detect_delimiter, znormalize, Dataset, Delimiter, ParseError, TimeSeries};
use ss_shapelets::metrics::transform;
use ss_shapelets::pipeline::{
    grid_search, raw_spectral_baseline, repeat_seeds, run_pipeline, sample_labels, PipelineConfig,
    PipelineError,
};
use ss_shapelets::Shapelet;

use output::{
    interquartile_range, median, BaselineRepeat, DatasetSummary, Document, RunDoc,
};

#[derive(Parser)]
#[command(name = "ss-shapelets", version, about = "Semi-supervised time-series clustering with salient-subsequence shapelets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the clustering pipeline on a UCR-style dataset file.
    Run(RunArgs),
    /// Extract the salient subsequence chain of one series.
    Chain(ChainArgs),
    /// Time chain discovery against the brute-force search.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// UCR-style input file: one series per line, class label first.
    #[arg(long)]
    data: PathBuf,
    /// Field separator; `auto` inspects the first line.
    #[arg(long, default_value = "auto")]
    delimiter: String,
    /// Fraction of series revealed as labeled seeds.
    #[arg(long, default_value_t = 0.05)]
    supervision: f64,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search k in 2..=9, shapelet length over l/30..l/10, lambda in {0.1, 1, 10}.
    #[arg(long, conflicts_with_all = ["k", "length_frac", "lambda"])]
    grid_search: bool,
    /// Number of shapelets (single-configuration mode).
    #[arg(long)]
    k: Option<usize>,
    /// Shapelet length as a fraction of the series length.
    #[arg(long)]
    length_frac: Option<f64>,
    /// Within-class scatter weight (single-configuration mode).
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Candidate multiplier: the pool is consolidated into beta * k candidates.
    #[arg(long, default_value_t = 2)]
    beta: usize,
    /// Rbf kernel width of the affinity matrix.
    #[arg(long, default_value_t = 1.0)]
    kernel_gamma: f64,
    /// Repeat the protocol with this many derived seeds; reports median/IQR.
    #[arg(long)]
    repeats: Option<usize>,
    /// Cluster the raw z-normalized series instead (no shapelets, no supervision).
    #[arg(long)]
    raw_spectral: bool,
    /// Include per-stage wall-clock timings in the output (breaks byte-level
    /// reproducibility of the file across runs).
    #[arg(long)]
    timings: bool,
    /// Also write the final distance-to-shapelet matrix as CSV.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    /// UCR-style input file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "auto")]
    delimiter: String,
    /// Row of the series to analyze (0-based).
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Window length (absolute).
    #[arg(long)]
    length: usize,
    /// Chain size.
    #[arg(long)]
    k: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// UCR-style input file; a synthetic series is used when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    delimiter: String,
    /// Row of the series to benchmark (0-based).
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Length of the synthetic series when no file is given.
    #[arg(long, default_value_t = 1024)]
    synthetic_length: usize,
    /// Seed for the synthetic series.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chain size held fixed during the window-length sweep.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Window-length fractions swept at fixed k.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.10, 0.15, 0.20, 0.25])]
    length_fracs: Vec<f64>,
    /// Window-length fraction held fixed during the chain-size sweep.
    #[arg(long, default_value_t = 0.10)]
    length_frac: f64,
    /// Chain sizes swept at fixed window length.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5, 6])]
    k_grid: Vec<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classified by exit code.
enum CliError {
    /// Unreadable or malformed input (exit 2).
    Input(String),
    /// Valid input but an impossible configuration (exit 3).
    Infeasible(String),
    /// Everything else (exit 1).
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::InvalidChain(_) | ChainError::StartOutOfRange { .. } => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        use PipelineError as P;
        match &e {
            P::NotFullyLabeled | P::NoLabeledIds | P::UnknownLabeledId(_) | P::Propagation(_) => {
                CliError::Input(e.to_string())
            }
            P::InvalidConfig(_)
            | P::CannotCoverClasses { .. }
            | P::BadFraction(_)
            | P::AllCellsInfeasible
            | P::Chain(_)
            | P::Candidates(_)
            | P::Selection(_)
            | P::Clustering(_) => CliError::Infeasible(e.to_string()),
            P::Metrics(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Chain(args) => chain(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_delimiter(name: &str, text: &str) -> Result<Delimiter, CliError> {
    match name {
        "auto" => Ok(detect_delimiter(text)),
        "comma" => Ok(Delimiter::Comma),
        "tab" => Ok(Delimiter::Tab),
        "whitespace" => Ok(Delimiter::Whitespace),
        other => Err(CliError::Input(format!(
            "unknown delimiter {other:?}; expected auto, comma, tab, or whitespace"
        ))),
    }
}

fn load_dataset(path: &Path, delimiter: &str) -> Result<Dataset, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let delimiter = parse_delimiter(delimiter, &text)?;
    Ok(Dataset::parse(&text, delimiter)?)
}

fn write_output(path: &Path, document: &impl serde::Serialize) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(document)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    fs::write(path, json + "\n")
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Shapelet length from a fraction of the series length.
fn absolute_length(fraction: f64, series_length: usize) -> Result<usize, CliError> {
    if !fraction.is_finite() || fraction <= 0.0 {
        return Err(CliError::Infeasible(format!("length fraction {fraction} must be positive")));
    }
    Ok(((fraction * series_length as f64).round() as usize).clamp(1, series_length))
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.data, &args.delimiter)?;
    let summary = DatasetSummary::of(&dataset);

    if args.raw_spectral {
        let document = match args.repeats {
            None => {
                let (assignment, rand_index) =
                    raw_spectral_baseline(&dataset, args.kernel_gamma, args.seed)?;
                Document::Baseline {
                    dataset: summary,
                    mode: "raw-spectral".into(),
                    kernel_gamma: args.kernel_gamma,
                    seed: args.seed,
                    assignment,
                    rand_index,
                }
            }
            Some(repeats) => {
                let mut runs = Vec::new();
                for seed in repeat_seeds(args.seed, repeats) {
                    let (assignment, rand_index) =
                        raw_spectral_baseline(&dataset, args.kernel_gamma, seed)?;
                    runs.push(BaselineRepeat { seed, assignment, rand_index });
                }
                let scores: Vec<f64> = runs.iter().map(|r| r.rand_index).collect();
                Document::BaselineRepeated {
                    dataset: summary,
                    mode: "raw-spectral".into(),
                    kernel_gamma: args.kernel_gamma,
                    repeats: runs,
                    median_rand_index: median(&scores),
                    iqr_rand_index: interquartile_range(&scores),
                }
            }
        };
        return write_output(&args.out, &document);
    }

    let single_config = |seed: u64| -> Result<PipelineConfig, CliError> {
        let (Some(k), Some(frac)) = (args.k, args.length_frac) else {
            return Err(CliError::Input(
                "either pass --grid-search or both --k and --length-frac".into(),
            ));
        };
        Ok(PipelineConfig {
            k,
            shapelet_len: absolute_length(frac, dataset.series_length)?,
            lambda: args.lambda,
            beta: args.beta,
            supervision: args.supervision,
            kernel_gamma: args.kernel_gamma,
            seed,
        })
    };
    if !args.grid_search {
        // fail fast on contradictory flags before any heavy work
        single_config(args.seed)?;
    }

    let one_run = |seed: u64| -> Result<RunDoc, CliError> {
        let labeled = sample_labels(&dataset, args.supervision, seed)?;
        if args.grid_search {
            let outcome = grid_search(&dataset, &labeled, seed)?;
            Ok(RunDoc::new(outcome.best, outcome.trace, args.timings))
        } else {
            let config = single_config(seed)?;
            let result = run_pipeline(&dataset, &config, &labeled)?;
            Ok(RunDoc::new(result, Vec::new(), args.timings))
        }
    };

    let document = match args.repeats {
        None => {
            let run = one_run(args.seed)?;
            if let Some(csv_path) = &args.emit_csv {
                emit_representation_csv(&dataset, &run, csv_path)?;
            }
            Document::Single { dataset: summary, run: Box::new(run) }
        }
        Some(repeats) => {
            let runs: Vec<RunDoc> =
                repeat_seeds(args.seed, repeats).into_iter().map(one_run).collect::<Result<_, _>>()?;
            if let (Some(csv_path), Some(first)) = (&args.emit_csv, runs.first()) {
                emit_representation_csv(&dataset, first, csv_path)?;
            }
            let scores: Vec<f64> = runs.iter().map(|r| r.rand_index).collect();
            Document::Repeated {
                dataset: summary,
                median_rand_index: median(&scores),
                iqr_rand_index: interquartile_range(&scores),
                repeats: runs,
            }
        }
    };
    write_output(&args.out, &document)
}

/// Distance-to-shapelet matrix of the run's selected shapelets over the
/// whole dataset, as CSV.
fn emit_representation_csv(dataset: &Dataset, run: &RunDoc, path: &Path) -> Result<(), CliError> {
    let shapelets: Vec<Shapelet> = run
        .shapelets
        .iter()
        .map(|s| Shapelet { values: s.values.clone(), source: None })
        .collect();
    let reps = transform(&shapelets, &dataset.series).map_err(|e| CliError::Internal(e.to_string()))?;
    let ids: Vec<usize> = dataset.series.iter().map(|s| s.id).collect();
    let mut buffer = Vec::new();
    reps.write_csv(&ids, &mut buffer).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(path, buffer)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn chain(args: ChainArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.data, &args.delimiter)?;
    let series = dataset.series.get(args.index).ok_or_else(|| {
        CliError::Input(format!(
            "series index {} is out of range; the file has {} series",
            args.index,
            dataset.len()
        ))
    })?;
    let chain = find_chain(series, args.length, args.k)?;
    let json = serde_json::to_string_pretty(&chain)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n")
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let series = match &args.data {
        Some(path) => {
            let dataset = load_dataset(path, &args.delimiter)?;
            dataset
                .series
                .get(args.index)
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "series index {} is out of range; the file has {} series",
                        args.index,
                        dataset.len()
                    ))
                })?
                .clone()
        }
        None => synthetic_series(args.synthetic_length, args.seed),
    };
    let l = series.len();

    let mut csv = String::from("sweep,algorithm,window_len,k,seconds,status\n");
    let mut measure = |sweep: &str, window_len: usize, k: usize| -> Result<(), CliError> {
        let clock = Instant::now();
        find_chain(&series, window_len, k)?;
        let fast = clock.elapsed().as_secs_f64();
        csv.push_str(&format!("{sweep},find_chain,{window_len},{k},{fast},ok\n"));

        let clock = Instant::now();
        match brute_force_chain(&series, window_len, k) {
            Ok(_) => {
                let brute = clock.elapsed().as_secs_f64();
                csv.push_str(&format!("{sweep},brute_force,{window_len},{k},{brute},ok\n"));
            }
            Err(ChainError::EnumerationGuard { .. }) => {
                csv.push_str(&format!("{sweep},brute_force,{window_len},{k},,skipped\n"));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };

    for &frac in &args.length_fracs {
        measure("window_len", absolute_length(frac, l)?, args.k)?;
    }
    let fixed_len = absolute_length(args.length_frac, l)?;
    for &k in &args.k_grid {
        measure("chain_size", fixed_len, k)?;
    }

    fs::write(&args.out, csv)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", args.out.display())))?;
    let mut err = std::io::stderr();
    let _ = writeln!(err, "benchmark written to {}", args.out.display());
    Ok(())
}

/// Z-normalized noisy multi-scale wave, deterministic per seed.
fn synthetic_series(length: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..length)
        .map(|t| {
            let t = t as f64;
            (t / 23.0).sin() + 0.5 * (t / 7.0).cos() + rng.gen_range(-0.3..0.3)
        })
        .collect();
    TimeSeries { id: 0, label: None, values: znormalize(&values) }
}
