use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{canonical_variant, ExperimentConfig};
use super::prepare::load_prepared;
use super::write_atomic;
use crate::error::{Error, Result};
use crate::eval::{curve_points, evaluate, wilcoxon_signed_rank, write_curve_csv, WilcoxonResult, MIN_N};
use crate::pipeline::{run_variants, Detector, Modifier, RunMetadata, ScoredRun, Splits};

pub const REPORT_FORMAT: &str = "aegr-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One (variant, seed) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub variant: String,
    pub detector: Detector,
    pub modifier: Modifier,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub n_pos: Option<usize>,
    pub n_neg: Option<usize>,
    pub scores_file: Option<String>,
    pub metadata: Option<RunMetadata>,
}

/// Mean and sample standard deviation over the completed seeds of a variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: String,
    pub approach: String,
    pub modification: String,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub pr_auc_mean: Option<f64>,
    pub pr_auc_sd: Option<f64>,
    pub roc_auc_mean: Option<f64>,
    pub roc_auc_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: String,
    /// Seeds on which both variants completed.
    pub seeds: Vec<u64>,
    pub result: Option<WilcoxonResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Non-deterministic run facts, kept apart from the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnvironment {
    pub crate_version: String,
    pub started_unix: u64,
    pub duration_secs: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub dataset_hash: String,
    pub n_features: usize,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
    /// The effective config, defaults included.
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
    pub comparisons: Vec<Comparison>,
    pub environment: RunEnvironment,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == RunStatus::Failed)
    }

    /// Report JSON without the environment block; equal for equal inputs.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("environment");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Detection results\n");
        let _ = writeln!(
            s,
            "Dataset `{}`: {} features, {} train / {} val / {} test rows. Seeds: {}.\n",
            &self.dataset_hash[..12.min(self.dataset_hash.len())],
            self.n_features,
            self.train_rows,
            self.val_rows,
            self.test_rows,
            self.config
                .seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(s, "| Detection approach | Modification method | PR AUC | ROC AUC | Runs |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        let mut last = "";
        for r in &self.summary {
            let approach = if r.approach == last { "" } else { &r.approach };
            last = &r.approach;
            let _ = writeln!(
                s,
                "| {approach} | {} | {} | {} | {}/{} |",
                r.modification,
                cell(r.pr_auc_mean, r.pr_auc_sd),
                cell(r.roc_auc_mean, r.roc_auc_sd),
                r.runs_ok,
                r.runs_ok + r.runs_failed
            );
        }
        if !self.comparisons.is_empty() {
            let _ = writeln!(s, "\n## Paired Wilcoxon signed-rank tests\n");
            let _ = writeln!(s, "| A | B | Metric | Seeds | W | p (two-sided) | p (A > B) |");
            let _ = writeln!(s, "|---|---|---|---|---|---|---|");
            for c in &self.comparisons {
                match (&c.result, &c.error) {
                    (Some(r), _) => {
                        let _ = writeln!(
                            s,
                            "| {} | {} | {} | {} | {} | {:.4} | {:.4} |",
                            c.a,
                            c.b,
                            c.metric,
                            c.seeds.len(),
                            r.w_statistic,
                            r.p_value,
                            r.p_greater
                        );
                    }
                    (None, e) => {
                        let _ = writeln!(
                            s,
                            "| {} | {} | {} | {} | - | {} | - |",
                            c.a,
                            c.b,
                            c.metric,
                            c.seeds.len(),
                            e.as_deref().unwrap_or("not computed")
                        );
                    }
                }
            }
        }
        let failed: Vec<&ReportRow> = self.rows.iter().filter(|r| r.status == RunStatus::Failed).collect();
        if !failed.is_empty() {
            let _ = writeln!(s, "\n## Failed runs\n");
            for r in failed {
                let _ = writeln!(
                    s,
                    "- `{}` seed {}: {}",
                    r.variant,
                    r.seed,
                    r.error.as_deref().unwrap_or("unknown error")
                );
            }
        }
        s
    }
}

fn cell(mean: Option<f64>, sd: Option<f64>) -> String {
    match (mean, sd) {
        (Some(m), Some(sd)) => format!("{m:.3} ± {sd:.3}"),
        (Some(m), None) => format!("{m:.3}"),
        _ => "-".into(),
    }
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

pub fn scores_file_name(variant: &str, seed: u64) -> String {
    format!("scores_{variant}_{seed}.csv")
}

pub fn latents_file_name(variant: &str, seed: u64) -> String {
    format!("latents_{variant}_{seed}.csv")
}

fn write_scores(path: &Path, run: &ScoredRun) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["row_index", "score", "label"])?;
        for (i, s) in run.scores.iter().enumerate() {
            let label = run
                .labels
                .as_ref()
                .map(|l| l[i].to_string())
                .unwrap_or_default();
            out.write_record([i.to_string(), s.to_string(), label])?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

fn write_latents(path: &Path, run: &ScoredRun) -> Result<()> {
    let Some(snap) = &run.latents else {
        return Ok(());
    };
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=snap.latents.ncols()).map(|j| format!("z{j}")).collect();
        header.extend(["label".into(), "kept".into()]);
        out.write_record(&header)?;
        for (i, row) in snap.latents.rows().into_iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(
                snap.labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            );
            rec.push((snap.kept[i] as u8).to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

fn row_for(spec_id: String, run: &Result<ScoredRun>, cfg: &ExperimentConfig, seed: u64, detector: Detector, modifier: Modifier) -> ReportRow {
    let mut row = ReportRow {
        variant: spec_id,
        detector,
        modifier,
        seed,
        status: RunStatus::Failed,
        error: None,
        roc_auc: None,
        pr_auc: None,
        n_pos: None,
        n_neg: None,
        scores_file: None,
        metadata: None,
    };
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.metadata = Some(run.metadata.clone());
    let outcome = (|| -> Result<()> {
        let labels = run
            .labels
            .as_ref()
            .ok_or_else(|| Error::Metric("test split has no labels".into()))?;
        let m = evaluate(&run.scores, labels)?;
        row.roc_auc = Some(m.roc_auc);
        row.pr_auc = Some(m.pr_auc);
        row.n_pos = Some(m.n_pos);
        row.n_neg = Some(m.n_neg);
        let name = scores_file_name(&row.variant, seed);
        write_scores(&cfg.out_dir.join(&name), run)?;
        row.scores_file = Some(name);
        write_latents(&cfg.out_dir.join(latents_file_name(&row.variant, seed)), run)?;
        if cfg.emit_curves {
            let points = curve_points(&run.scores, labels)?;
            let path = cfg.out_dir.join(format!("curve_{}_{seed}.csv", row.variant));
            write_atomic(&path, |w| write_curve_csv(w, &points))?;
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => row.status = RunStatus::Ok,
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        if !groups.contains_key(&r.variant) {
            order.push(r.variant.clone());
        }
        groups.entry(r.variant.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|v| {
            let g = &groups[&v];
            let ok: Vec<&&ReportRow> = g.iter().filter(|r| r.status == RunStatus::Ok).collect();
            let pr: Vec<f64> = ok.iter().filter_map(|r| r.pr_auc).collect();
            let roc: Vec<f64> = ok.iter().filter_map(|r| r.roc_auc).collect();
            let (pr_auc_mean, pr_auc_sd) = mean_sd(&pr);
            let (roc_auc_mean, roc_auc_sd) = mean_sd(&roc);
            SummaryRow {
                approach: g[0].detector.label().into(),
                modification: g[0].modifier.label().into(),
                variant: v,
                runs_ok: ok.len(),
                runs_failed: g.len() - ok.len(),
                pr_auc_mean,
                pr_auc_sd,
                roc_auc_mean,
                roc_auc_sd,
            }
        })
        .collect()
}

fn compare(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Vec<Comparison> {
    let value = |variant: &str, seed: u64, metric: &str| -> Option<f64> {
        rows.iter()
            .find(|r| r.variant == variant && r.seed == seed && r.status == RunStatus::Ok)
            .and_then(|r| if metric == "pr_auc" { r.pr_auc } else { r.roc_auc })
    };
    let mut out = Vec::new();
    for (a, b) in &cfg.comparisons {
        let (a, b) = match (canonical_variant(a), canonical_variant(b)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        for metric in ["pr_auc", "roc_auc"] {
            let mut seeds = Vec::new();
            let (mut xa, mut xb) = (Vec::new(), Vec::new());
            for &seed in &cfg.seeds {
                if let (Some(va), Some(vb)) = (value(&a, seed, metric), value(&b, seed, metric)) {
                    seeds.push(seed);
                    xa.push(va);
                    xb.push(vb);
                }
            }
            let (result, error) = if seeds.len() < MIN_N {
                (
                    None,
                    Some(format!(
                        "needs at least {MIN_N} seeds where both variants completed, have {}",
                        seeds.len()
                    )),
                )
            } else {
                match wilcoxon_signed_rank(&xa, &xb) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            out.push(Comparison {
                a: a.clone(),
                b: b.clone(),
                metric: metric.into(),
                seeds,
                result,
                error,
            });
        }
    }
    out
}

/// Run every (variant, seed) of the config on `jobs` worker threads and
/// write `report.json`, `report.md` and the per-run CSVs into the output
/// directory. Failed variants are recorded, not fatal; check
/// [`RunReport::failed`].
pub fn cmd_run(cfg: &ExperimentConfig, jobs: usize) -> Result<RunReport> {
    cfg.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let data = load_prepared(cfg)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let specs = cfg.runs()?;
    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    let splits = Splits {
        train: &data.train,
        val: &data.val,
        test: &data.test,
    };
    log::info!("running {} variant runs on {jobs} threads", specs.len());
    let results = pool.install(|| run_variants(&specs, splits, &cfg.train, cfg.lof.min_pts));

    let rows: Vec<ReportRow> = specs
        .iter()
        .zip(&results)
        .map(|(spec, run)| {
            let row = row_for(spec.id(), run, cfg, spec.seed, spec.detector, spec.modifier);
            if let Some(e) = &row.error {
                log::error!("{} seed {} failed: {e}", row.variant, row.seed);
            }
            row
        })
        .collect();
    let report = RunReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        dataset_hash: data.manifest.content_hash(),
        n_features: data.manifest.n_features(),
        train_rows: data.train.n_rows(),
        val_rows: data.val.n_rows(),
        test_rows: data.test.n_rows(),
        config: cfg.clone(),
        summary: summarize(&rows),
        comparisons: compare(cfg, &rows),
        rows,
        environment: RunEnvironment {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            started_unix,
            duration_secs: started.elapsed().as_secs_f64(),
            jobs,
        },
    };
    write_atomic(&cfg.out_dir.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        w.write_all(b"\n").map_err(|e| Error::io("report.json", e))
    })?;
    write_atomic(&cfg.out_dir.join("report.md"), |w| {
        w.write_all(report.to_markdown().as_bytes())
            .map_err(|e| Error::io("report.md", e))
    })?;
    Ok(report)
}
