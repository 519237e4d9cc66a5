//! Score-based metrics and the paired signed-rank test.
//!
//! ```bash
//! cargo run -p aegr --example metrics_and_wilcoxon
//! ```

use aegr::eval::{curve_points, evaluate, wilcoxon_signed_rank};

pub fn run_example() -> aegr::Result<()> {
    let scores = [0.9, 0.8, 0.7, 0.6, 0.55, 0.4, 0.3, 0.2];
    let labels = [1, 1, 0, 1, 0, 0, 0, 0];
    let m = evaluate(&scores, &labels)?;
    println!("ROC AUC {:.4}, PR AUC {:.4} ({} positives, {} negatives)", m.roc_auc, m.pr_auc, m.n_pos, m.n_neg);
    assert!((m.roc_auc - 14.0 / 15.0).abs() < 1e-12);

    let curve = curve_points(&scores, &labels)?;
    println!("{} curve points", curve.len());

    // PR AUC of two detectors over six seeds
    let a = [0.62, 0.58, 0.71, 0.66, 0.60, 0.69];
    let b = [0.55, 0.57, 0.60, 0.61, 0.52, 0.63];
    let w = wilcoxon_signed_rank(&a, &b)?;
    println!(
        "W = {}, two-sided p = {:.4}, one-sided p = {:.4} ({:?}, n = {})",
        w.w_statistic, w.p_value, w.p_greater, w.method, w.n_effective
    );
    assert!((w.p_greater - 1.0 / 64.0).abs() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
