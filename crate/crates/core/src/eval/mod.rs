//! Ranking metrics and paired significance testing.

mod metrics;
mod wilcoxon;

pub use metrics::{
    curve_points, evaluate, pr_auc, roc_auc, write_curve_csv, CurvePoint, MetricResult,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N, MIN_N};
