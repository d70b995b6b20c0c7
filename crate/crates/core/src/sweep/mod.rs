//! Seeded sweeps over sample size or regularization strength.
//!
//! A sweep is a grid of independent cells `(kernel, model, n, λ, rep)`. Every
//! random draw in a cell comes from seeds derived from the master seed and the
//! cell's own coordinates, so a cell's rows do not depend on which other cells
//! run, in what order, or on how many threads.

mod aggregate;
mod config;
mod rows;
mod trends;

pub use aggregate::{aggregate, read_aggregates, AggregateRow, Stat, AGG_METRICS};
pub use config::{
    log_grid, preset, Axis, BandwidthRule, DataSource, KrrSchedule, Schedule, SweepConfig,
};
pub use rows::{read_rows, rows_to_csv, CellOutcome, Split, SweepRow, ROW_HEADER};
pub use trends::{assert_trends, spearman, TrendCheck, TrendKind, TrendReport};

use crate::data::{
    bayes_probability, build_recalibration_set, derive_seed, gen_miscalibrated_scores, gen_toy,
    gen_toy_1d, stratified_subsample, LabeledDataset, RecalibrationSet,
};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::kernels::{median_heuristic, KernelFamily, KernelSpec};
use crate::metrics::{evaluate, sigmoid, smooth_ce, MetricOptions, PredictionSet, Space};
use crate::models::{fit_klr, fit_krr, KernelChoice, LossFamily, PROBABILITY_CLIP};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_SPLIT: u64 = 3;
const TAG_CELL: u64 = 4;

/// Rows (two per cell) and their per-cell aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    pub fn rows_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn aggregates_csv(&self) -> String {
        aggregate::aggregates_to_csv(&self.aggregates)
    }
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kernel: KernelFamily,
    pub model: LossFamily,
    pub n: usize,
    pub lambda: f64,
    pub rep: usize,
}

impl Cell {
    pub fn seed(&self, master: u64) -> u64 {
        let kernel = match self.kernel {
            KernelFamily::Gaussian => 0,
            KernelFamily::Laplace => 1,
        };
        let model = match self.model {
            LossFamily::Squared => 0,
            LossFamily::Logistic => 1,
        };
        derive_seed(&[
            master,
            TAG_CELL,
            self.rep as u64,
            self.n as u64,
            self.lambda.to_bits(),
            kernel,
            model,
        ])
    }
}

/// Cells in canonical order: kernel, model, n, λ, repetition.
pub fn cells(config: &SweepConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &kernel in &config.kernels {
        for &model in &config.models {
            for &n in &config.n_grid {
                for lambda in config.lambdas(n, kernel, model) {
                    for rep in 0..config.seeds {
                        out.push(Cell {
                            kernel,
                            model,
                            n,
                            lambda,
                            rep,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Train/test data for one repetition and size. Score inputs are one-dimensional.
struct Split2 {
    train: LabeledDataset,
    test: LabeledDataset,
    /// Probability-space reference predictions for train and test.
    reference: (Vec<f64>, Vec<f64>),
}

/// Loaded once per sweep; drawing a cell's data is then a pure function of seeds.
enum Source {
    Toy { one_d: bool },
    Pool { set: RecalibrationSet, space: Space },
    Miscalibrated(crate::data::Distortion),
}

impl Source {
    fn load(config: &SweepConfig) -> Result<Source> {
        Ok(match &config.data {
            DataSource::Toy1D => Source::Toy { one_d: true },
            DataSource::Toy2D => Source::Toy { one_d: false },
            DataSource::Miscalibrated(d) => Source::Miscalibrated(*d),
            DataSource::ScoreFile { path, space } => {
                let set = build_recalibration_set(path)?;
                let space = space.or(set.space).unwrap_or(Space::Probability);
                let need = config.test_size + config.n_grid.last().copied().unwrap_or(0);
                if set.len() < need {
                    return Err(Error::input(format!(
                        "score file has {} rows; test_size plus the largest n needs {need}",
                        set.len()
                    )));
                }
                Source::Pool { set, space }
            }
        })
    }

    fn draw(&self, config: &SweepConfig, rep: usize, n: usize) -> Result<Split2> {
        let m = config.master_seed;
        let r = rep as u64;
        let train_seed = derive_seed(&[m, TAG_TRAIN, r, n as u64]);
        let test_seed = derive_seed(&[m, TAG_TEST, r]);
        let scores_ref = |s: &RecalibrationSet, space: Space| -> Vec<f64> {
            s.scores
                .iter()
                .map(|&v| match space {
                    Space::Logit => sigmoid(v),
                    Space::Probability => v,
                })
                .collect()
        };
        match self {
            Source::Toy { one_d } => {
                let gen = if *one_d { gen_toy_1d } else { gen_toy };
                let train = gen(n, train_seed)?;
                let test = gen(config.test_size, test_seed)?;
                let bayes =
                    |d: &LabeledDataset| d.x.rows().map(bayes_probability).collect::<Vec<_>>();
                let reference = (bayes(&train), bayes(&test));
                Ok(Split2 {
                    train,
                    test,
                    reference,
                })
            }
            Source::Miscalibrated(d) => {
                let train = gen_miscalibrated_scores(n, *d, train_seed)?;
                let test = gen_miscalibrated_scores(config.test_size, *d, test_seed)?;
                let reference = (
                    scores_ref(&train, Space::Logit),
                    scores_ref(&test, Space::Logit),
                );
                Ok(Split2 {
                    train: train.to_dataset(),
                    test: test.to_dataset(),
                    reference,
                })
            }
            Source::Pool { set, space } => {
                let mut idx: Vec<usize> = (0..set.len()).collect();
                idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(&[
                    m, TAG_SPLIT, r,
                ])));
                let (test_idx, pool_idx) = idx.split_at(config.test_size);
                let test = set.select(test_idx);
                let pool = set.select(pool_idx).to_dataset();
                let train = stratified_subsample(&pool, n, train_seed)?;
                let train_set = RecalibrationSet::new(
                    train.x.as_slice().to_vec(),
                    train.y.clone(),
                    set.source_model_id.clone(),
                    Some(*space),
                )?;
                let reference = (scores_ref(&train_set, *space), scores_ref(&test, *space));
                Ok(Split2 {
                    train,
                    test: test.to_dataset(),
                    reference,
                })
            }
        }
    }
}

fn constant_smce(p: f64, labels: &[u8]) -> Result<f64> {
    let p = p.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP);
    Ok(smooth_ce(&PredictionSet::probabilities(
        vec![p; labels.len()],
        labels.to_vec(),
    )?)?
    .0)
}

fn run_cell(config: &SweepConfig, source: &Source, cell: &Cell) -> Result<[CellOutcome; 2]> {
    let data = source.draw(config, cell.rep, cell.n)?;
    let sigma = match config.bandwidth {
        BandwidthRule::Fixed(s) => s,
        BandwidthRule::Median if data.train.len() >= 2 => median_heuristic(&data.train.x)?.sigma,
        BandwidthRule::Median => 1.0,
    };
    let spec = KernelSpec::new(cell.kernel, sigma)?;
    let seed = cell.seed(config.master_seed);
    let choice = KernelChoice::auto(
        spec,
        data.train.dim(),
        cell.n,
        config.exact_threshold,
        config.rff_features,
        seed,
    )?;
    let (model, report) = match cell.model {
        LossFamily::Squared => fit_krr(&data.train.x, &data.train.y, &choice, cell.lambda)?,
        LossFamily::Logistic => fit_klr(
            &data.train.x,
            &data.train.y,
            &choice,
            cell.lambda,
            &config.klr,
        )?,
    };
    let opts = MetricOptions {
        bins: config.bins,
        ..MetricOptions::default()
    };
    let base_rate = data.train.base_rate();
    let mut out = Vec::with_capacity(2);
    for (set, reference) in [
        (&data.train, &data.reference.0),
        (&data.test, &data.reference.1),
    ] {
        let preds = model.predict(&set.x)?.to_prediction_set(&set.y)?;
        let metrics = evaluate(&preds, &opts)?;
        metrics.validate()?;
        let ref_smce = smooth_ce(&PredictionSet::probabilities(
            reference.clone(),
            set.y.clone(),
        )?)?
        .0;
        out.push(CellOutcome {
            sigma,
            hilbert_norm: model.hilbert_norm(),
            objective: model.train_objective(),
            iterations: report.iterations,
            err_n: report.err_n,
            metrics,
            base_smce: constant_smce(base_rate, &set.y)?,
            ref_smce,
        });
    }
    let test = out.pop().expect("two splits");
    let train = out.pop().expect("two splits");
    Ok([train, test])
}

/// Runs every cell (in parallel when enabled) and aggregates.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let job = || run_sweep_with(config, Mode::default());
    match config.workers {
        Some(w) => exec::with_workers(w, job),
        None => job(),
    }
}

/// [`run_sweep`] with an explicit execution mode for the cell loop.
pub fn run_sweep_with(config: &SweepConfig, mode: Mode) -> Result<SweepResult> {
    config.validate()?;
    let source = Source::load(config)?;
    let cells = cells(config);
    let outcomes = exec::map_range(mode, cells.len(), |i| run_cell(config, &source, &cells[i]));
    let mut rows = Vec::with_capacity(cells.len() * 2);
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let seed = cell.seed(config.master_seed);
        let row = |split, outcome| SweepRow {
            rep: cell.rep,
            n: cell.n,
            lambda: cell.lambda,
            kernel: cell.kernel,
            model: cell.model,
            split,
            cell_seed: seed,
            outcome,
        };
        match outcome {
            Ok([train, test]) => {
                rows.push(row(Split::Train, Ok(train)));
                rows.push(row(Split::Test, Ok(test)));
            }
            Err(e) => {
                let msg = e.to_string();
                rows.push(row(Split::Train, Err(msg.clone())));
                rows.push(row(Split::Test, Err(msg)));
            }
        }
    }
    let aggregates = aggregate(&rows);
    Ok(SweepResult {
        axis: config.axis,
        rows,
        aggregates,
    })
}
