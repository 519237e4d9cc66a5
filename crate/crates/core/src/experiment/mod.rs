//! File-based experiment workflow behind the `aegr` binary.
//!
//! `prepare` encodes, splits and normalizes a CSV dataset into
//! `<out>/prepared/`. `run` executes every configured (variant, seed) pair
//! and writes `report.json`, `report.md`, `scores_<variant>_<seed>.csv` and
//! `latents_<variant>_<seed>.csv`. `plotdata` turns one run's latents into
//! `latent_scatter.csv` and `kde_curves.csv`.

mod config;
mod plot;
mod prepare;
mod run;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::{canonical_variant, AugmentConfig, ExperimentConfig, LofConfig, PlotConfig};
pub use plot::{cmd_plotdata, kde_curves, KdeCurve, LatentTable, PlotClass, PlotSummary};
pub use prepare::{
    cmd_prepare, load_prepared, prepare_splits, PreparedData, PreparedManifest, SourceFile,
    SplitInfo, MANIFEST_FILE, PREPARED_FORMAT, PREPARED_VERSION,
};
pub use run::{
    cmd_run, latents_file_name, scores_file_name, Comparison, ReportRow, RunEnvironment,
    RunReport, RunStatus, SummaryRow, REPORT_FORMAT, REPORT_VERSION,
};

use crate::error::{Error, Result};

/// Write through a sibling temp file and rename it into place, so readers
/// never see a partial file.
pub(crate) fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        let file = w.into_inner().map_err(|e| Error::io(&tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

impl ExperimentConfig {
    /// Apply command-line overrides: `--out` and `--seed-override`.
    pub fn with_overrides(mut self, out: Option<&Path>, seed: Option<u64>) -> Self {
        if let Some(out) = out {
            self.out_dir = out.to_path_buf();
        }
        if let Some(seed) = seed {
            self.seeds = vec![seed];
            self.plot.seed = None;
        }
        self
    }
}
