//! Parameter search and scaling regressions.

mod nelder_mead;
mod optimize;
mod regression;

pub use optimize::{
    optimize_from, optimize_ladder, optimize_parameters, ObjectiveKind, OptimizationResult,
    OptimizerConfig,
};
pub use regression::{
    fit_log_linear, fit_mu_model, predict_alpha_ub, predict_lambda_ub, LogLinearFit, ModelVariant,
    MuSample, MuVariant, RegressionModel, TrainingInfo,
};
