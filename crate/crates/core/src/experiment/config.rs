use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoencoder::TrainConfig;
use crate::data::{Schema, SplitSpec};
use crate::error::{Error, Result};
use crate::lof::DEFAULT_MIN_PTS;
use crate::pipeline::{VariantSpec, DEFAULT_AUG_FACTOR, DEFAULT_AUG_SIGMA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofConfig {
    pub min_pts: usize,
}

impl Default for LofConfig {
    fn default() -> Self {
        LofConfig {
            min_pts: DEFAULT_MIN_PTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub factor: f64,
    pub sigma: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            factor: DEFAULT_AUG_FACTOR,
            sigma: DEFAULT_AUG_SIGMA,
        }
    }
}

/// Which run `plotdata` reads. Unset fields fall back to the first
/// autoencoder variant and the first seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// JSON experiment description. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Separate test file. When set, `split.val_fraction` of the dataset
    /// becomes validation data and the train/test fractions are unused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dataset: Option<PathBuf>,
    #[serde(default)]
    pub schema: Schema,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub lof: LofConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    /// Variant ids such as `aegr_lof_prune`; defaults to all eight.
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Variant-id pairs compared with a paired Wilcoxon test over seeds.
    #[serde(default)]
    pub comparisons: Vec<(String, String)>,
    /// Also write `curve_<variant>_<seed>.csv` files.
    #[serde(default)]
    pub emit_curves: bool,
    #[serde(default)]
    pub plot: PlotConfig,
}

fn default_variants() -> Vec<String> {
    VariantSpec::comparison_matrix(0)
        .iter()
        .map(VariantSpec::id)
        .collect()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// `ae_lof` and `ae_lof_none` both name the same variant.
pub fn canonical_variant(id: &str) -> Result<String> {
    Ok(id.parse::<VariantSpec>()?.id())
}

impl ExperimentConfig {
    /// Minimal config for `dataset`, every other field at its default.
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            test_dataset: None,
            schema: Schema::default(),
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            lof: LofConfig::default(),
            augment: AugmentConfig::default(),
            variants: default_variants(),
            seeds: default_seeds(),
            out_dir: default_out(),
            comparisons: Vec::new(),
            emit_curves: false,
            plot: PlotConfig::default(),
        }
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset);
        if let Some(t) = self.test_dataset.as_mut() {
            join(t);
        }
        join(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("variants must not be empty".into()));
        }
        if self.lof.min_pts == 0 {
            return Err(Error::Config("lof.min_pts must be at least 1".into()));
        }
        self.split.validate()?;
        self.train.validate()?;
        let specs = self.variant_specs(0)?;
        for (a, b) in &self.comparisons {
            for id in [a, b] {
                let id = canonical_variant(id)?;
                if !specs.iter().any(|s| s.id() == id) {
                    return Err(Error::Config(format!(
                        "comparison names '{id}', which is not in variants"
                    )));
                }
            }
        }
        if let Some(v) = &self.plot.variant {
            let v = canonical_variant(v)?;
            if !specs.iter().any(|s| s.id() == v) {
                return Err(Error::Config(format!("plot variant '{v}' is not in variants")));
            }
        }
        Ok(())
    }

    /// Parsed variants carrying `seed` and the configured augmentation.
    pub fn variant_specs(&self, seed: u64) -> Result<Vec<VariantSpec>> {
        self.variants
            .iter()
            .map(|v| {
                let mut spec: VariantSpec = v.parse()?;
                spec.seed = seed;
                spec.aug_factor = self.augment.factor;
                spec.aug_sigma = self.augment.sigma;
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }

    /// Every (variant, seed) pair, variant-major.
    pub fn runs(&self) -> Result<Vec<VariantSpec>> {
        let base = self.variant_specs(0)?;
        Ok(base
            .iter()
            .flat_map(|s| self.seeds.iter().map(move |&seed| VariantSpec { seed, ..*s }))
            .collect())
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.out_dir.join("prepared")
    }

    /// Check that the dataset files exist before doing any work.
    pub fn check_inputs(&self) -> Result<()> {
        for p in std::iter::once(&self.dataset).chain(self.test_dataset.as_ref()) {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
                ));
            }
        }
        Ok(())
    }
}
