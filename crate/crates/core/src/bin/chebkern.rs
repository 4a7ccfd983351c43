use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chebkern::dataset_io::{read_dataset, write_dataset};
use chebkern::experiment::{
    attach_targets, dataset_file_name, evaluate_samples, history_csv, load_config,
    load_or_generate, per_sample_csv, run_experiment, ExperimentConfig,
};
use chebkern::git::GitBaseline;
use chebkern::lsq::LeastSquaresSolver;
use chebkern::nn::{load_model, save_model, train};
use chebkern::{split_dataset, DatasetConfig, DatasetSample, Error, Result};

/// Chebyshev-kernel reconstruction of response functions from moments.
#[derive(Parser)]
#[command(name = "chebkern", version)]
struct Cli {
    /// Experiment configuration (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one JSON-lines dataset per configured resolution.
    Generate,
    /// Solve least-squares targets for a dataset at a moment budget.
    Targets {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        moments: usize,
    },
    /// Train a network on a dataset carrying targets.
    Train {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score a trained network, the Gaussian baseline and the targets on the test split.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Run the full (Δ, M) sweep and write results.csv plus plot data.
    Compare,
    /// Generate datasets, then run the comparison sweep.
    All,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn cell_tag(config: &DatasetConfig) -> String {
    format!(
        "K{}_L{}_M{}",
        config.grid.k(),
        config.grid.l(),
        config.moment_count
    )
}

fn split_of(config: &ExperimentConfig, ds: &DatasetConfig, samples: Vec<DatasetSample>) -> Result<chebkern::response::Split<DatasetSample>> {
    split_dataset(samples, config.split, ds.seed)
}

fn write_file(path: &Path, body: String) -> Result<()> {
    fs::write(path, body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn generate(config: &ExperimentConfig) -> Result<()> {
    for grid in &config.resolutions {
        let ds = config.dataset_config(grid);
        let path = config.output_dir.join(dataset_file_name(grid));
        let samples = load_or_generate(&ds, &path)?;
        println!("{}: {} samples", path.display(), samples.len());
    }
    Ok(())
}

fn targets(config: &ExperimentConfig, input: &Path, moments: usize) -> Result<()> {
    let (mut ds, samples) = stage("targets", read_dataset(input))?;
    let mut samples = samples
        .iter()
        .map(|s| s.truncated(moments))
        .collect::<Result<Vec<_>>>()?;
    ds.moment_count = moments;
    let solver = LeastSquaresSolver::for_grid(&ds.grid, moments)?;
    attach_targets(&mut samples, &solver)?;
    let path = config
        .output_dir
        .join(format!("targets_{}.jsonl", cell_tag(&ds)));
    write_dataset(&path, &ds, &samples)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn train_cmd(config: &ExperimentConfig, input: &Path) -> Result<()> {
    let (ds, samples) = read_dataset(input)?;
    let split = split_of(config, &ds, samples)?;
    let mlp = config.mlp_config(&ds.grid, ds.moment_count);
    let (model, history) = train(&split.train, &split.validation, &mlp)?;
    let tag = cell_tag(&ds);
    let model_path = config.output_dir.join(format!("model_{tag}.json"));
    save_model(&model, &model_path)?;
    println!("wrote {}", model_path.display());
    write_file(
        &config.output_dir.join(format!("history_{tag}.csv")),
        history_csv(&history),
    )
}

fn evaluate(config: &ExperimentConfig, input: &Path, model_path: &Path) -> Result<()> {
    let (ds, samples) = read_dataset(input)?;
    let model = load_model(model_path)?;
    let split = split_of(config, &ds, samples)?;
    let solver = LeastSquaresSolver::for_grid(&ds.grid, ds.moment_count)?;
    let baseline = stage("baseline", GitBaseline::new(&ds.grid, ds.moment_count))?;
    let costs = evaluate_samples(&split.test, &model, &solver, &baseline)?;
    write_file(
        &config.output_dir.join(format!("costs_{}.csv", cell_tag(&ds))),
        per_sample_csv(&costs),
    )
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => stage("config", load_config(path))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    stage("config", config.validate())?;
    stage("output", fs::create_dir_all(&config.output_dir).map_err(Error::from))?;
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    match cli.command {
        Command::Generate => stage("generate", generate(&config)),
        Command::Targets { input, moments } => stage("targets", targets(&config, &input, moments)),
        Command::Train { input } => stage("train", train_cmd(&config, &input)),
        Command::Evaluate { input, model } => stage("evaluate", evaluate(&config, &input, &model)),
        Command::Compare | Command::All => {
            if matches!(cli.command, Command::All) {
                stage("generate", generate(&config))?;
            }
            let outcome = stage("compare", run_experiment(&config, jobs))?;
            for row in &outcome.rows {
                println!(
                    "delta={:.4} M={:>3} {:<10} p05={:.5} p50={:.5} p95={:.5}",
                    row.delta, row.moment_count, row.method, row.p05, row.p50, row.p95
                );
            }
            println!("wrote {}", config.output_dir.join("results.csv").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let stage = err.stage().unwrap_or("unknown");
            eprintln!("error in stage `{stage}`: {err}");
            ExitCode::FAILURE
        }
    }
}
