//! AUC, the experiment suites and report output.

mod auc;
pub mod config;
pub mod curves;
pub mod report;
pub mod suites;
pub mod svg;

pub use auc::{auc, auc_by_pairs, auc_by_ranks};
pub use config::{parse_ratios, BetaChoice, SuiteConfig, SuiteKind};
pub use curves::{curves_csv, reconstruction_curves, reconstruction_scatter, CurveBin};
pub use report::{emit_report, ExperimentReport, Method, RunManifest};
pub use suites::{
    rerun, run_csv_suite, run_highdim_suite, run_lowdim_suite, run_manifold_suite, run_suite, LowdimFamily,
    LOWDIM_FAMILIES,
};
pub use svg::{scatter_svg, ScatterPlot};
