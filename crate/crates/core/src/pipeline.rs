//! Detection variants.
//!
//! | detector   | what is scored                                         |
//! |------------|--------------------------------------------------------|
//! | `lof_raw`  | LOF fitted on normalized train features                |
//! | `ae_re`    | reconstruction error of a plain autoencoder            |
//! | `ae_lof`   | LOF on latents of a plain autoencoder                  |
//! | `aegr_lof` | LOF on latents of an autoencoder trained with reversal |
//!
//! The latent detectors take a modifier: `prune` drops training latents
//! whose reconstruction error exceeds the mean, `prune_da` additionally
//! appends Gaussian-jittered copies of the survivors. Only the LOF
//! reference set changes; the autoencoder is not refitted.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{concatenate, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{build_architecture, train, Network, TrainConfig, TrainHistory};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lof::LofModel;

pub const DEFAULT_AUG_FACTOR: f64 = 2.0;
pub const DEFAULT_AUG_SIGMA: f64 = 0.1;

/// Mixed into the run seed for weight initialisation so that it does not
/// share a stream with batch shuffling.
const INIT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const AUG_SEED_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    LofRaw,
    AeRe,
    AeLof,
    AegrLof,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::LofRaw => "lof_raw",
            Detector::AeRe => "ae_re",
            Detector::AeLof => "ae_lof",
            Detector::AegrLof => "aegr_lof",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Detector::LofRaw => "Stand-alone LOF",
            Detector::AeRe => "AE-RE",
            Detector::AeLof => "AE-LOF",
            Detector::AegrLof => "AEGR-LOF",
        }
    }

    fn uses_autoencoder(self) -> bool {
        self != Detector::LofRaw
    }

    fn reversal(self) -> bool {
        self == Detector::AegrLof
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modifier {
    None,
    Prune,
    PruneDa,
}

impl Modifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::None => "none",
            Modifier::Prune => "prune",
            Modifier::PruneDa => "prune_da",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Modifier::None => "None",
            Modifier::Prune => "Pruning",
            Modifier::PruneDa => "Pruning+DA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub detector: Detector,
    pub modifier: Modifier,
    #[serde(default = "default_aug_factor")]
    pub aug_factor: f64,
    #[serde(default = "default_aug_sigma")]
    pub aug_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_aug_factor() -> f64 {
    DEFAULT_AUG_FACTOR
}

fn default_aug_sigma() -> f64 {
    DEFAULT_AUG_SIGMA
}

impl VariantSpec {
    pub fn new(detector: Detector, modifier: Modifier, seed: u64) -> Self {
        VariantSpec {
            detector,
            modifier,
            aug_factor: DEFAULT_AUG_FACTOR,
            aug_sigma: DEFAULT_AUG_SIGMA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modifier != Modifier::None
            && !matches!(self.detector, Detector::AeLof | Detector::AegrLof)
        {
            return Err(Error::Config(format!(
                "modifier {} only applies to ae_lof and aegr_lof",
                self.modifier.as_str()
            )));
        }
        if !(self.aug_factor.is_finite() && self.aug_factor >= 1.0) {
            return Err(Error::Config(format!("aug_factor {} < 1", self.aug_factor)));
        }
        if !(self.aug_sigma.is_finite() && self.aug_sigma >= 0.0) {
            return Err(Error::Config(format!("aug_sigma {} < 0", self.aug_sigma)));
        }
        Ok(())
    }

    /// `detector_modifier`, e.g. `aegr_lof_prune`.
    pub fn id(&self) -> String {
        format!("{}_{}", self.detector.as_str(), self.modifier.as_str())
    }

    /// The eight rows of the comparison table.
    pub fn comparison_matrix(seed: u64) -> Vec<VariantSpec> {
        use Detector::*;
        use Modifier::*;
        [
            (LofRaw, None),
            (AeRe, None),
            (AeLof, None),
            (AeLof, Prune),
            (AeLof, PruneDa),
            (AegrLof, None),
            (AegrLof, Prune),
            (AegrLof, PruneDa),
        ]
        .into_iter()
        .map(|(d, m)| VariantSpec::new(d, m, seed))
        .collect()
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for VariantSpec {
    type Err = Error;

    /// Parses `detector_modifier` ids; a bare detector means modifier `none`.
    fn from_str(s: &str) -> Result<Self> {
        const DETECTORS: [Detector; 4] = [
            Detector::LofRaw,
            Detector::AeRe,
            Detector::AeLof,
            Detector::AegrLof,
        ];
        for d in DETECTORS {
            let Some(rest) = s.strip_prefix(d.as_str()) else {
                continue;
            };
            let modifier = match rest {
                "" | "_none" => Modifier::None,
                "_prune" => Modifier::Prune,
                "_prune_da" => Modifier::PruneDa,
                _ => continue,
            };
            let spec = VariantSpec::new(d, modifier, 0);
            spec.validate()?;
            return Ok(spec);
        }
        Err(Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Keep latents whose reconstruction error is at most the mean error.
///
/// Returns the kept rows and a per-row keep mask. At least one row always
/// survives.
pub fn prune(latents: &Array2<f64>, res: &[f64]) -> Result<(Array2<f64>, Vec<bool>)> {
    if res.len() != latents.nrows() {
        return Err(Error::Dimension(format!(
            "{} reconstruction errors for {} latent rows",
            res.len(),
            latents.nrows()
        )));
    }
    if res.is_empty() {
        return Err(Error::NoRows("prune".into()));
    }
    if res.iter().any(|r| !r.is_finite()) {
        return Err(Error::Dimension("non-finite reconstruction error".into()));
    }
    let threshold = mean_threshold(res);
    let mask: Vec<bool> = res.iter().map(|&r| r <= threshold).collect();
    let keep: Vec<usize> = (0..res.len()).filter(|&i| mask[i]).collect();
    Ok((latents.select(Axis(0), &keep), mask))
}

/// Mean written as `min + mean(r - min)` so it can never fall below the
/// minimum, and equals it exactly when all errors are equal.
fn mean_threshold(res: &[f64]) -> f64 {
    let min = res.iter().cloned().fold(f64::INFINITY, f64::min);
    let excess: f64 = res.iter().map(|r| r - min).sum();
    min + excess / res.len() as f64
}

/// Verify a pruning outcome: the kept set is non-empty, strictly smaller
/// unless all errors are equal, and its mean error is at most the overall
/// mean.
pub fn check_prune_contract(res: &[f64], mask: &[bool]) -> Result<()> {
    let kept: Vec<f64> = res
        .iter()
        .zip(mask)
        .filter(|(_, &k)| k)
        .map(|(r, _)| *r)
        .collect();
    if kept.is_empty() {
        return Err(Error::PruneContract("no rows survived".into()));
    }
    let all_equal = res.iter().all(|r| *r == res[0]);
    if kept.len() == res.len() && !all_equal {
        return Err(Error::PruneContract(
            "nothing was pruned although errors differ".into(),
        ));
    }
    let overall = res.iter().sum::<f64>() / res.len() as f64;
    let survivors = kept.iter().sum::<f64>() / kept.len() as f64;
    // sums are rounded independently; allow a few ulps
    if survivors > overall * (1.0 + 8.0 * f64::EPSILON) {
        return Err(Error::PruneContract(format!(
            "survivor mean {survivors} exceeds overall mean {overall}"
        )));
    }
    Ok(())
}

/// Append `floor((factor - 1) n)` noisy copies of the rows, cycling
/// through them in order, each coordinate jittered by `N(0, sigma²)`.
pub fn augment(latents: &Array2<f64>, factor: f64, sigma: f64, seed: u64) -> Result<Array2<f64>> {
    if !(factor.is_finite() && factor >= 1.0) {
        return Err(Error::Config(format!("augmentation factor {factor} < 1")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Config(format!("augmentation sigma {sigma} must be >= 0")));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::Config(format!("augmentation sigma {sigma}: {e}")))?;
    let n = latents.nrows();
    let extra = ((factor - 1.0) * n as f64 + 1e-9).floor() as usize;
    if n == 0 || extra == 0 {
        return Ok(latents.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = Array2::zeros((extra, latents.ncols()));
    for (k, mut row) in added.rows_mut().into_iter().enumerate() {
        let src = latents.row(k % n);
        for (v, s) in row.iter_mut().zip(src.iter()) {
            *v = s + noise.sample(&mut rng);
        }
    }
    concatenate(Axis(0), &[latents.view(), added.view()])
        .map_err(|e| Error::Dimension(e.to_string()))
}

#[derive(Debug, Clone, Copy)]
pub struct Splits<'a> {
    pub train: &'a Dataset,
    pub val: &'a Dataset,
    pub test: &'a Dataset,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub train_rows: usize,
    /// Rows in the LOF reference set after pruning and augmentation.
    pub reference_rows: Option<usize>,
    pub pruned_rows: Option<usize>,
    pub augmented_rows: Option<usize>,
    pub min_pts_used: Option<usize>,
    pub epochs_run: Option<usize>,
    pub best_epoch: Option<usize>,
    pub reversals: Option<usize>,
    pub latent_width: Option<usize>,
    pub mean_train_re: Option<f64>,
    pub mean_kept_re: Option<f64>,
}

/// Training-set latents of an autoencoder run, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSnapshot {
    pub latents: Array2<f64>,
    pub labels: Option<Vec<u8>>,
    pub kept: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub variant: VariantSpec,
    /// One score per test row; higher is more anomalous.
    pub scores: Vec<f64>,
    pub labels: Option<Vec<u8>>,
    pub metadata: RunMetadata,
    pub latents: Option<LatentSnapshot>,
}

#[derive(Debug)]
struct TrainedAe {
    net: Network,
    history: TrainHistory,
}

/// Weight-initialisation seed for a run seed.
pub fn init_seed(seed: u64) -> u64 {
    seed ^ INIT_SEED_SALT
}

fn train_autoencoder(splits: Splits, cfg: &TrainConfig, reversal: bool, seed: u64) -> Result<TrainedAe> {
    let cfg = TrainConfig { seed, ..*cfg };
    let cfg = if reversal { cfg } else { cfg.without_reversal() };
    let net = build_architecture(splits.train.n_features(), init_seed(seed))?;
    let (net, history) = train(net, splits.train, splits.val, &cfg)?;
    Ok(TrainedAe { net, history })
}

fn check_splits(splits: Splits) -> Result<()> {
    let m = splits.train.n_features();
    if splits.val.n_features() != m || splits.test.n_features() != m {
        return Err(Error::Dimension(format!(
            "split widths differ: train {m}, val {}, test {}",
            splits.val.n_features(),
            splits.test.n_features()
        )));
    }
    Ok(())
}

fn fit_and_score(reference: Array2<f64>, queries: &Array2<f64>, min_pts: usize) -> Result<(Vec<f64>, usize)> {
    let n = reference.nrows();
    let used = min_pts.min(n.saturating_sub(1)).max(1);
    if used != min_pts {
        log::warn!("lof reference has {n} rows; min_pts lowered from {min_pts} to {used}");
    }
    let model = LofModel::fit(reference, used)?;
    Ok((model.score(queries.view())?, used))
}

fn score_variant(
    spec: &VariantSpec,
    splits: Splits,
    trained: Option<&TrainedAe>,
    min_pts: usize,
) -> Result<ScoredRun> {
    let mut meta = RunMetadata {
        train_rows: splits.train.n_rows(),
        ..RunMetadata::default()
    };
    let mut snapshot = None;
    let scores = match (spec.detector, trained) {
        (Detector::LofRaw, _) => {
            let (s, used) = fit_and_score(
                splits.train.features.clone(),
                &splits.test.features,
                min_pts,
            )?;
            meta.reference_rows = Some(splits.train.n_rows());
            meta.min_pts_used = Some(used);
            s
        }
        (_, None) => return Err(Error::Config("autoencoder variant without a trained model".into())),
        (detector, Some(ae)) => {
            meta.epochs_run = Some(ae.history.epochs_run());
            meta.best_epoch = Some(ae.history.best_epoch);
            meta.reversals = Some(ae.history.reversals());
            meta.latent_width = Some(ae.net.latent_width());
            let train_latents = ae.net.encode(splits.train)?;
            let train_re = ae.net.reconstruction_error(splits.train)?;
            meta.mean_train_re = Some(train_re.iter().sum::<f64>() / train_re.len() as f64);

            let (scores, kept) = if detector == Detector::AeRe {
                (ae.net.reconstruction_error(splits.test)?, vec![true; train_re.len()])
            } else {
                let (reference, mask) = match spec.modifier {
                    Modifier::None => (train_latents.clone(), vec![true; train_re.len()]),
                    Modifier::Prune | Modifier::PruneDa => {
                        let (kept, mask) = prune(&train_latents, &train_re)?;
                        check_prune_contract(&train_re, &mask)?;
                        let kept_re: Vec<f64> = train_re
                            .iter()
                            .zip(&mask)
                            .filter(|(_, &k)| k)
                            .map(|(r, _)| *r)
                            .collect();
                        meta.pruned_rows = Some(mask.iter().filter(|k| !**k).count());
                        meta.mean_kept_re =
                            Some(kept_re.iter().sum::<f64>() / kept_re.len() as f64);
                        (kept, mask)
                    }
                };
                let reference = if spec.modifier == Modifier::PruneDa {
                    let before = reference.nrows();
                    let aug = augment(
                        &reference,
                        spec.aug_factor,
                        spec.aug_sigma,
                        spec.seed ^ AUG_SEED_SALT,
                    )?;
                    meta.augmented_rows = Some(aug.nrows() - before);
                    aug
                } else {
                    reference
                };
                meta.reference_rows = Some(reference.nrows());
                let test_latents = ae.net.encode(splits.test)?;
                let (s, used) = fit_and_score(reference, &test_latents, min_pts)?;
                meta.min_pts_used = Some(used);
                (s, mask)
            };
            snapshot = Some(LatentSnapshot {
                latents: train_latents,
                labels: splits.train.labels.clone(),
                kept,
            });
            scores
        }
    };
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Metric(format!("{spec}: non-finite score")));
    }
    Ok(ScoredRun {
        variant: *spec,
        scores,
        labels: splits.test.labels.clone(),
        metadata: meta,
        latents: snapshot,
    })
}

/// Run one variant end to end. The variant's seed drives weight
/// initialisation, batch shuffling and augmentation noise.
pub fn run_variant(
    spec: &VariantSpec,
    splits: Splits,
    cfg: &TrainConfig,
    min_pts: usize,
) -> Result<ScoredRun> {
    run_variants(std::slice::from_ref(spec), splits, cfg, min_pts)
        .pop()
        .expect("one result per spec")
}

/// Run many variants, training each distinct (reversal, seed) autoencoder
/// once and sharing it. Work is spread over the current rayon pool;
/// results come back in input order and do not depend on thread count.
pub fn run_variants(
    specs: &[VariantSpec],
    splits: Splits,
    cfg: &TrainConfig,
    min_pts: usize,
) -> Vec<Result<ScoredRun>> {
    if let Err(e) = check_splits(splits).and_then(|_| cfg.validate()) {
        let msg = e.to_string();
        return specs.iter().map(|_| Err(Error::Config(msg.clone()))).collect();
    }
    // a disabled reversal trains the same network as a plain run
    let reversal_on = cfg.reversal_enabled();
    let key = |s: &VariantSpec| (s.detector.reversal() && reversal_on, s.seed);
    let mut keys: Vec<(bool, u64)> = specs
        .iter()
        .filter(|s| s.detector.uses_autoencoder())
        .map(key)
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let trained: HashMap<(bool, u64), std::result::Result<Arc<TrainedAe>, String>> = keys
        .par_iter()
        .map(|&(rev, seed)| {
            let r = train_autoencoder(splits, cfg, rev, seed)
                .map(Arc::new)
                .map_err(|e| e.to_string());
            ((rev, seed), r)
        })
        .collect();

    specs
        .par_iter()
        .map(|spec| {
            spec.validate()?;
            let model = if spec.detector.uses_autoencoder() {
                match &trained[&key(spec)] {
                    Ok(m) => Some(Arc::clone(m)),
                    Err(msg) => return Err(Error::Upstream(msg.clone())),
                }
            } else {
                None
            };
            score_variant(spec, splits, model.as_deref(), min_pts)
        })
        .collect()
}
