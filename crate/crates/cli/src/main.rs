//! Command-line front end for the optimizer benchmark harness.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 for usage
//! errors (bad flags or values), 2 for failures at run time (I/O, malformed
//! input files).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use cmapca::bench::report::{read_reference_table, read_traces_csv, write_derived, write_report};
use cmapca::bench::stats::{compute_stats, default_target_ladder, ErtTable};
use cmapca::bench::{run_experiment, ExperimentConfig, RunTrace};
use cmapca::objectives::{is_known_function, Suite};
use cmapca::pca::KRule;
use cmapca::selftest;
use cmapca::strategy::VariantSpec;

#[derive(Parser)]
#[command(
    name = "cmapca",
    version,
    about = "Benchmark harness for covariance-adaptation search with optional PCA-reduced sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write a report directory
    Run(RunArgs),
    /// Recompute statistics CSVs from an existing traces.csv
    Stats(StatsArgs),
    /// List the benchmark functions in a suite
    Suite(SuiteArgs),
    /// Run the embedded consistency checks
    Selftest,
}

fn parse_rho(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_tau(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated variants: plain, pca, pca-random
    #[arg(long, value_delimiter = ',', default_value = "plain,pca,pca-random")]
    variants: Vec<String>,

    /// Per-generation probability that pca-random samples reduced
    #[arg(long, value_parser = parse_rho, default_value_t = 0.5)]
    rho: f64,

    /// Suite name (paper-multimodal, sanity, all) or comma-separated ids
    #[arg(long, default_value = "paper-multimodal")]
    functions: String,

    /// Comma-separated problem dimensions
    #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
    dims: Vec<usize>,

    /// Repetitions per (variant, function, dimension) cell
    #[arg(long, default_value_t = 30)]
    reps: u32,

    /// Evaluation budget per run, in multiples of the dimension
    #[arg(long = "budget-mult", default_value_t = 20)]
    budget_mult: u64,

    /// Base seed; all run seeds derive from it deterministically
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Report directory
    #[arg(long, env = "CMAPCA_OUT", default_value = "results")]
    out: PathBuf,

    /// Worker threads (0 = one per core); never changes the results
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Keep principal components reaching this explained-variance fraction
    #[arg(long = "pca-tau", value_parser = parse_tau, default_value_t = 0.95, conflicts_with = "pca_k")]
    pca_tau: f64,

    /// Keep exactly this many principal components instead of --pca-tau
    #[arg(long = "pca-k")]
    pca_k: Option<usize>,

    /// Reduced-space sample count (0 = population size)
    #[arg(long, default_value_t = 0)]
    theta: usize,

    /// How many recent elite generations feed each PCA fit
    #[arg(long = "pca-window", default_value_t = 1)]
    pca_window: usize,

    /// ert.csv supplying external reference ERTs for the loss ratios
    #[arg(long = "reference-file")]
    reference_file: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Directory containing traces.csv
    #[arg(long = "in", default_value = "results")]
    in_dir: PathBuf,

    /// Directory for the recomputed CSVs (defaults to the --in directory)
    #[arg(long)]
    out: Option<PathBuf>,

    /// ert.csv supplying external reference ERTs for the loss ratios
    #[arg(long = "reference-file")]
    reference_file: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite to list: paper-multimodal, sanity, or all
    #[arg(long, default_value = "all")]
    which: String,
}

/// Failures split by exit code: usage errors name the flag to fix.
enum CliError {
    Usage(String),
    Runtime(cmapca::Error),
}

impl From<cmapca::Error> for CliError {
    fn from(e: cmapca::Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_variants(args: &RunArgs) -> Result<Vec<VariantSpec>, CliError> {
    let k_rule = match args.pca_k {
        Some(k) => {
            if k == 0 {
                return Err(usage("--pca-k must be at least 1"));
            }
            KRule::Fixed(k)
        }
        None => KRule::VarianceThreshold(args.pca_tau),
    };
    let theta = if args.theta == 0 {
        None
    } else {
        Some(args.theta)
    };
    if args.pca_window == 0 {
        return Err(usage("--pca-window must be at least 1"));
    }
    let mut specs = Vec::new();
    for name in &args.variants {
        let mut spec = match name.as_str() {
            "plain" => VariantSpec::plain(),
            "pca" => VariantSpec::always_pca(),
            "pca-random" => VariantSpec::random_pca(args.rho),
            other => {
                return Err(usage(format!(
                    "--variants: unknown variant `{other}` (expected plain, pca, pca-random)"
                )))
            }
        };
        spec.pca_k_rule = k_rule;
        spec.theta = theta;
        spec.window = args.pca_window;
        specs.push(spec);
    }
    Ok(specs)
}

fn parse_functions(raw: &str) -> Result<Vec<String>, CliError> {
    if let Ok(suite) = Suite::parse(raw) {
        return Ok(suite.function_ids().iter().map(|s| s.to_string()).collect());
    }
    let ids: Vec<String> = raw.split(',').map(|s| s.trim().to_string()).collect();
    for id in &ids {
        if !is_known_function(id) {
            return Err(usage(format!(
                "--functions: `{id}` is neither a suite name nor a known function id"
            )));
        }
    }
    Ok(ids)
}

fn load_reference(path: Option<&PathBuf>) -> Result<Option<ErtTable>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => {
            let ladder = default_target_ladder();
            Ok(Some(read_reference_table(p, &ladder)?))
        }
    }
}

/// One line per (variant, dim): how many runs, how many solved, final gaps.
fn print_summary(traces: &[RunTrace]) {
    let final_target = *default_target_ladder().last().expect("nonempty ladder");
    let mut groups: BTreeMap<(&str, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry((&t.variant, t.dim)).or_default().push(t);
    }
    for ((variant, dim), group) in groups {
        let solved = group
            .iter()
            .filter(|t| t.first_hit(final_target).is_some())
            .count();
        let diverged = group.iter().filter(|t| t.diverged).count();
        let mut gaps: Vec<f64> = group
            .iter()
            .map(|t| t.points.last().map(|p| p.gap).unwrap_or(f64::INFINITY))
            .collect();
        gaps.sort_by(f64::total_cmp);
        let median_gap = cmapca::bench::stats::quantile(&gaps, 0.5);
        let evals: u64 = group.iter().map(|t| t.consumed()).sum();
        let runs = group.len();
        println!(
            "{variant} dim={dim}: {runs} runs, {solved} reached {final_target:.0e}, \
             {diverged} diverged, median final gap {median_gap:.3e}, total evals {evals}"
        );
    }
}

fn cmd_run(args: RunArgs) -> CliResult {
    let cfg = ExperimentConfig {
        variants: parse_variants(&args)?,
        function_ids: parse_functions(&args.functions)?,
        dims: args.dims.clone(),
        reps: args.reps,
        budget_multiplier: args.budget_mult,
        base_seed: args.seed,
        workers: args.workers,
    };
    cfg.validate()
        .map_err(|e| usage(format!("invalid configuration: {e}")))?;
    let reference = load_reference(args.reference_file.as_ref())?;
    let traces = run_experiment(&cfg)?;
    let bundle = compute_stats(&traces, reference.as_ref());
    let manifest = write_report(&traces, &bundle, &cfg, &args.out)?;
    print_summary(&traces);
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        args.out.display()
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CliResult {
    let traces_path = args.in_dir.join("traces.csv");
    let traces = read_traces_csv(&traces_path)?;
    let reference = load_reference(args.reference_file.as_ref())?;
    let bundle = compute_stats(&traces, reference.as_ref());
    let out = args.out.as_ref().unwrap_or(&args.in_dir);
    let names = write_derived(&bundle, out)?;
    println!(
        "recomputed {} from {} runs in {} -> {}",
        names.join(", "),
        traces.len(),
        traces_path.display(),
        out.display()
    );
    Ok(())
}

fn cmd_suite(args: SuiteArgs) -> CliResult {
    let suite = Suite::parse(&args.which).map_err(|_| {
        usage(format!(
            "--which: `{}` is not a suite (paper-multimodal, sanity, all)",
            args.which
        ))
    })?;
    for id in suite.function_ids() {
        println!("{id}");
    }
    Ok(())
}

fn cmd_selftest() -> CliResult {
    let results = selftest::run_all();
    let mut failed = 0;
    for r in &results {
        if r.passed {
            println!("ok   {}", r.name);
        } else {
            println!("FAIL {}: {}", r.name, r.detail);
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::Runtime(cmapca::Error::InvalidParams(format!(
            "{failed} of {} checks failed",
            results.len()
        ))));
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Suite(args) => cmd_suite(args),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
