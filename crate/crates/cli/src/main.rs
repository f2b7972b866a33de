//! `qrl` — run, aggregate, and plot multi-seed training experiments
//! described by TOML config files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrl_core::harness;

#[derive(Parser)]
#[command(
    name = "qrl",
    version,
    about = "Quantum and classical actor-critic experiments on CartPole",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Comma-separated seed list overriding the config (e.g. 0,1,2).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seeds: Option<Vec<u64>>,
    /// Output root; results land in <out>/<experiment-name>/.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Parallel workers (default: QRL_WORKERS env var, then all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct AggregateArgs {
    /// Experiment directory containing per-seed CSVs and the manifest.
    dir: PathBuf,
    /// Bin width in environment steps.
    #[arg(long, default_value_t = 2000)]
    bin: u64,
}

#[derive(Args, Clone)]
struct PlotArgs {
    /// Experiment directory containing aggregate CSVs.
    dir: PathBuf,
    /// Plot file format (svg).
    #[arg(long, default_value = "svg")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Train every (variant, seed) pair and write per-seed CSVs.
    Run(RunArgs),
    /// Bin per-seed curves into mean/std aggregate CSVs.
    Aggregate(AggregateArgs),
    /// Render aggregate curves into a single chart.
    Plot(PlotArgs),
    /// Run, then aggregate, then plot.
    All {
        #[command(flatten)]
        run: RunArgs,
        /// Bin width in environment steps.
        #[arg(long, default_value_t = 2000)]
        bin: u64,
        /// Plot file format (svg).
        #[arg(long, default_value = "svg")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> qrl_core::Result<()> {
    match command {
        Command::Run(args) => {
            run(&args)?;
        }
        Command::Aggregate(args) => aggregate(&args)?,
        Command::Plot(args) => plot(&args)?,
        Command::All { run: run_args, bin, format } => {
            let exp_dir = run(&run_args)?;
            aggregate(&AggregateArgs { dir: exp_dir.clone(), bin })?;
            plot(&PlotArgs { dir: exp_dir, format })?;
        }
    }
    Ok(())
}

fn run(args: &RunArgs) -> qrl_core::Result<PathBuf> {
    let mut config = harness::load_config(&args.config)?;
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
        config.validate()?;
    }
    let workers = harness::resolve_workers(args.workers);
    let total_runs = config.variants.len() * config.seeds.len();
    eprintln!(
        "running {name}: {v} variant(s) x {s} seed(s) = {total_runs} run(s), {workers} worker(s)",
        name = config.name,
        v = config.variants.len(),
        s = config.seeds.len(),
    );
    let summary = harness::run_experiment(&config, &args.out, workers)?;
    for (label, seeds) in &summary.manifest.results {
        for (seed, status) in seeds {
            if status != "ok" {
                eprintln!("  {label} seed {seed}: {status}");
            }
        }
    }
    eprintln!("results in {}", summary.experiment_dir.display());
    if summary.failures > 0 {
        return Err(qrl_core::Error::Config(format!(
            "{} run(s) failed; see manifest",
            summary.failures
        )));
    }
    Ok(summary.experiment_dir)
}

fn aggregate(args: &AggregateArgs) -> qrl_core::Result<()> {
    let written = harness::aggregate_dir(&args.dir, args.bin)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn plot(args: &PlotArgs) -> qrl_core::Result<()> {
    let path = harness::plot_dir(&args.dir, &args.format)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
