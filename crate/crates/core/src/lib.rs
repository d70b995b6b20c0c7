//! Smooth calibration error toolkit.
//!
//! * [`metrics`]: exact smooth CE, dual smooth CE, post-processing gaps,
//!   binned ECE and MMCE, with a grid-DP oracle.
//! * [`kernels`] and [`rff`]: Gaussian/Laplace kernels, Gram matrices,
//!   the median bandwidth heuristic and random Fourier features.
//! * [`models`]: L2-regularized kernel ridge regression (closed form) and
//!   kernel logistic regression (gradient descent), both with an
//!   unregularized bias.
//! * [`data`]: the Gaussian toy generator, score-file ingestion, stratified
//!   subsampling and miscalibrated score fixtures.
//! * [`sweep`]: seeded sample-size and regularization sweeps with
//!   aggregation and trend checks.
//!
//! The `parallel` feature (on by default) spreads Gram construction, kernel
//! sums and sweep cells over rayon; results are bit-identical either way.

pub mod data;
pub mod error;
pub mod exec;
pub mod format;
pub mod kernels;
pub mod metrics;
pub mod models;
pub mod points;
pub mod rff;
pub mod sweep;

pub use data::{
    gen_miscalibrated_scores, gen_toy, gen_toy_1d, Distortion, LabeledDataset, RecalibrationSet,
};
pub use error::{Error, Result};
pub use kernels::{
    gram_matrix, kernel_eval, median_heuristic, Bandwidth, KernelFamily, KernelSpec,
};
pub use metrics::{
    binned_ece, dual_smooth_ce, evaluate, mmce, pgap_logistic, pgap_sq, smooth_ce, witness_oracle,
    LipschitzWitness, MetricOptions, MetricReport, PredictionSet, Space,
};
pub use models::{
    fit_klr, fit_krr, objective, objective_gradient, predict, training_smce_bound, KernelChoice,
    KernelModel, KlrOptions, LossFamily, Predictions, TrainReport,
};
pub use points::Points;
pub use rff::{rff_features, RffMap};
pub use sweep::{run_sweep, SweepConfig, SweepResult};
