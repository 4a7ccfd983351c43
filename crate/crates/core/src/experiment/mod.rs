//! The comparison sweep: for every resolution `Δ` and moment budget `M`, solve
//! least-squares targets, train one network, and score the network, the
//! Gaussian baseline and the least-squares optimum on the test split.

mod output;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::GridSpec;
use crate::dataset_io::{read_dataset, read_dataset_config, write_dataset};
use crate::error::{Error, Result};
use crate::git::GitBaseline;
use crate::lsq::{LeastSquaresSolver, TargetVector};
use crate::nn::{predict_kernel, train, History, MlpConfig, MlpModel};
use crate::response::{generate_dataset, split_dataset, DatasetConfig, DatasetSample, Split, SplitCounts};

pub use output::{
    dataset_file_name, emit_outputs, history_csv, per_sample_csv, results_csv, RESULTS_HEADER,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Template; the grid, width lower bound, moment count and seed are set per resolution.
    pub dataset: DatasetConfig,
    /// Template; sizes and seed are set per cell.
    pub mlp: MlpConfig,
    pub split: SplitCounts,
    pub moment_budgets: Vec<usize>,
    pub resolutions: Vec<GridSpec>,
    pub confidence_level: f64,
    pub output_dir: PathBuf,
    /// Master seed; every dataset, split, initialization and shuffle derives from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            mlp: MlpConfig::default(),
            split: SplitCounts::default(),
            moment_budgets: vec![2, 5, 8, 10, 15, 20, 30, 40, 50, 60, 70],
            resolutions: vec![
                GridSpec::new(70, 6).expect("valid"),
                GridSpec::new(70, 2).expect("valid"),
            ],
            confidence_level: 0.90,
            output_dir: PathBuf::from("results"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.moment_budgets.is_empty() || self.moment_budgets.iter().any(|m| *m < 2) {
            return Err(Error::invalid("moment budgets must be non-empty and each >= 2"));
        }
        if self.resolutions.is_empty() {
            return Err(Error::invalid("at least one resolution is required"));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::invalid("confidence level must lie in (0, 1)"));
        }
        if self.split.total() != self.dataset.n_samples {
            return Err(Error::invalid(format!(
                "split {} + {} + {} does not cover {} samples",
                self.split.train, self.split.validation, self.split.test, self.dataset.n_samples
            )));
        }
        if self.split.train == 0 || self.split.test == 0 {
            return Err(Error::invalid("training and test splits must be non-empty"));
        }
        for grid in &self.resolutions {
            if grid.l() >= grid.k() {
                return Err(Error::invalid(format!(
                    "resolution needs L < K, got K={}, L={}",
                    grid.k(),
                    grid.l()
                )));
            }
            self.dataset_config(grid).validate()?;
        }
        self.mlp.for_moments(2).validate()
    }

    pub fn max_moments(&self) -> usize {
        self.moment_budgets.iter().copied().max().unwrap_or(1)
    }

    /// Dataset for one resolution: `σ_min = Δ`, moments up to the largest budget.
    pub fn dataset_config(&self, grid: &GridSpec) -> DatasetConfig {
        DatasetConfig {
            moment_count: self.max_moments(),
            seed: self.seed,
            ..self.dataset.with_grid(*grid)
        }
    }

    /// Network configuration for one `(grid, M)` cell.
    pub fn mlp_config(&self, grid: &GridSpec, moment_count: usize) -> MlpConfig {
        MlpConfig {
            seed: cell_seed(self.seed, grid, moment_count),
            ..self.mlp.for_moments(moment_count)
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_seed(seed: u64, grid: &GridSpec, moment_count: usize) -> u64 {
    let mut h = splitmix(seed);
    for v in [grid.k() as u64, grid.l() as u64, moment_count as u64] {
        h = splitmix(h ^ v);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Git,
    LsqOracle,
    Nn,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Git, Method::LsqOracle, Method::Nn];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Git => "git",
            Method::LsqOracle => "lsq_oracle",
            Method::Nn => "nn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub delta: f64,
    pub moment_count: usize,
    pub method: Method,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub n_test: usize,
}

/// Nearest-rank percentiles at `(1-level)/2`, `1/2` and `(1+level)/2`.
pub fn confidence_band(values: &[f64], level: f64) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("confidence band of an empty list"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pick = |p: f64| {
        // the tiny offset keeps p·n = 95.000…01 from stepping to the next rank
        let rank = (p * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
        sorted[rank - 1]
    };
    Ok((pick((1.0 - level) / 2.0), pick(0.5), pick((1.0 + level) / 2.0)))
}

/// `C_U` of each method on one test sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCosts {
    pub index: usize,
    pub nn: f64,
    pub git: f64,
    pub lsq_oracle: f64,
}

impl SampleCosts {
    pub fn get(&self, method: Method) -> f64 {
        match method {
            Method::Git => self.git,
            Method::LsqOracle => self.lsq_oracle,
            Method::Nn => self.nn,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub grid: GridSpec,
    pub moment_count: usize,
    pub git_lambda: f64,
    pub history: History,
    pub costs: Vec<SampleCosts>,
}

impl CellResult {
    pub fn rows(&self, level: f64) -> Result<Vec<ComparisonRow>> {
        Method::ALL
            .iter()
            .map(|&method| {
                let values: Vec<f64> = self.costs.iter().map(|c| c.get(method)).collect();
                let (p05, p50, p95) = confidence_band(&values, level)?;
                Ok(ComparisonRow {
                    delta: self.grid.delta(),
                    moment_count: self.moment_count,
                    method,
                    p05,
                    p50,
                    p95,
                    n_test: values.len(),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub rows: Vec<ComparisonRow>,
    pub cells: Vec<CellResult>,
    pub files: Vec<PathBuf>,
}

/// Attaches least-squares targets `c` for the samples' moment count.
pub fn attach_targets(samples: &mut [DatasetSample], solver: &LeastSquaresSolver) -> Result<()> {
    samples.par_iter_mut().try_for_each(|s| {
        if s.moments.len() != solver.design().moment_count() {
            return Err(Error::mismatch(
                "sample moments",
                solver.design().moment_count(),
                s.moments.len(),
            ));
        }
        s.target_c = Some(solver.solve_spectrum(&s.spectrum)?);
        Ok(())
    })
}

/// Scores a trained network, the baseline and the stored targets on test samples.
pub fn evaluate_samples(
    samples: &[DatasetSample],
    model: &MlpModel,
    solver: &LeastSquaresSolver,
    baseline: &GitBaseline,
) -> Result<Vec<SampleCosts>> {
    let design = solver.design();
    samples
        .iter()
        .map(|s| {
            let target = TargetVector::from_spectrum(&s.spectrum, design.grid());
            let lsq_c = match &s.target_c {
                Some(c) => c.clone(),
                None => solver.solve(&target)?,
            };
            let nn_c = predict_kernel(model, &s.moments)?.effective(&s.moments)?;
            Ok(SampleCosts {
                index: s.index,
                nn: design.cost_upper(&nn_c, &target)?,
                git: baseline.cost(s)?,
                lsq_oracle: design.cost_upper(&lsq_c, &target)?,
            })
        })
        .collect()
}

fn truncate_all(samples: &[DatasetSample], m: usize) -> Result<Vec<DatasetSample>> {
    samples.iter().map(|s| s.truncated(m)).collect()
}

/// One `(Δ, M)` cell on an already split dataset.
pub fn run_cell(
    config: &ExperimentConfig,
    grid: &GridSpec,
    moment_count: usize,
    split: &Split<DatasetSample>,
) -> Result<CellResult> {
    let solver = LeastSquaresSolver::for_grid(grid, moment_count).map_err(|e| e.in_stage("targets"))?;
    let mut train_set = truncate_all(&split.train, moment_count)?;
    let mut val_set = truncate_all(&split.validation, moment_count)?;
    let mut test_set = truncate_all(&split.test, moment_count)?;
    for set in [&mut train_set, &mut val_set, &mut test_set] {
        attach_targets(set, &solver).map_err(|e| e.in_stage("targets"))?;
    }

    let mlp = config.mlp_config(grid, moment_count);
    let (model, history) = train(&train_set, &val_set, &mlp).map_err(|e| e.in_stage("train"))?;

    let baseline = GitBaseline::new(grid, moment_count).map_err(|e| e.in_stage("baseline"))?;
    let costs = evaluate_samples(&test_set, &model, &solver, &baseline)
        .map_err(|e| e.in_stage("evaluate"))?;
    Ok(CellResult {
        grid: *grid,
        moment_count,
        git_lambda: baseline.lambda(),
        history,
        costs,
    })
}

/// Loads `path` if its header matches `config`, otherwise generates and writes it.
pub fn load_or_generate(config: &DatasetConfig, path: &Path) -> Result<Vec<DatasetSample>> {
    if path.exists() && read_dataset_config(path).ok().as_ref() == Some(config) {
        let (_, samples) = read_dataset(path)?;
        return Ok(samples);
    }
    let samples = generate_dataset(config)?;
    write_dataset(path, config, &samples)?;
    Ok(samples)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Runs every cell, writes all artifacts under `config.output_dir`, and returns
/// the comparison rows sorted by `(Δ, M, method)`. When a cell fails the rows of
/// the cells that succeeded are still written before the error is returned.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::from(e).in_stage("output"))?;
    let pool = pool(jobs)?;

    pool.install(|| {
        let mut splits = Vec::with_capacity(config.resolutions.len());
        for grid in &config.resolutions {
            let ds_config = config.dataset_config(grid);
            let path = config.output_dir.join(dataset_file_name(grid));
            let samples = load_or_generate(&ds_config, &path).map_err(|e| e.in_stage("generate"))?;
            let split = split_dataset(samples, config.split, ds_config.seed)
                .map_err(|e| e.in_stage("split"))?;
            splits.push(split);
        }

        let jobs: Vec<(usize, usize)> = (0..config.resolutions.len())
            .flat_map(|r| config.moment_budgets.iter().map(move |&m| (r, m)))
            .collect();
        let results: Vec<Result<CellResult>> = jobs
            .par_iter()
            .map(|&(r, m)| run_cell(config, &config.resolutions[r], m, &splits[r]))
            .collect();

        let mut cells = Vec::new();
        let mut first_err = None;
        for res in results {
            match res {
                Ok(cell) => cells.push(cell),
                Err(e) if first_err.is_none() => first_err = Some(e),
                Err(_) => {}
            }
        }
        let mut rows = Vec::new();
        for cell in &cells {
            rows.extend(cell.rows(config.confidence_level)?);
        }
        sort_rows(&mut rows);
        let files = emit_outputs(&rows, &cells, config).map_err(|e| e.in_stage("output"))?;
        match first_err {
            Some(e) => Err(e.in_stage("compare")),
            None => Ok(ExperimentOutcome { rows, cells, files }),
        }
    })
}

pub fn sort_rows(rows: &mut [ComparisonRow]) {
    rows.sort_by(|a, b| {
        a.delta
            .total_cmp(&b.delta)
            .then(a.moment_count.cmp(&b.moment_count))
            .then(a.method.cmp(&b.method))
    });
}

/// Loads an experiment configuration from TOML (`.toml`) or JSON (anything else).
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}
