//! Experiment plumbing: configuration, cross-validation, ratio search,
//! α sensitivity, bound diagnostics and report rendering.

pub mod bounds;
pub mod config;
pub mod cv;
pub mod grid;
pub mod report;
pub mod sensitivity;

pub use bounds::bounds_experiment;
pub use config::{fit_pipeline, ExperimentConfig, Method};
pub use cv::{cross_validate, cross_validate_folds, fold_models, report_metrics, score_split};
pub use grid::{full_grid, ratio_grid_search, ratio_scan, GridCell, GridSearchResult, Scan};
pub use report::{emit_report, Format, Table};
pub use sensitivity::{alpha_sensitivity, default_alphas, SensitivityReport, SensitivityRow};
