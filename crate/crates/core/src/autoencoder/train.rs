use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{gradient_score, Gradients, Network};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Rows above which the larger minibatch size is used.
const LARGE_DATASET_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// `None` picks 64 for more than 2000 training rows and 16 otherwise.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    /// Reversal fires in epochs `j > gr_start_epoch` (epochs count from 1).
    pub gr_start_epoch: usize,
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            batch_size: None,
            learning_rate: 0.01,
            gr_start_epoch: 5,
            patience: 10,
            min_improvement: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.min_improvement.is_finite() && self.min_improvement >= 0.0) {
            return Err(Error::Config("min_improvement must be non-negative".into()));
        }
        Ok(())
    }

    pub fn effective_batch_size(&self, n_rows: usize) -> usize {
        self.batch_size.unwrap_or(if n_rows > LARGE_DATASET_ROWS { 64 } else { 16 })
    }

    pub fn reversal_enabled(&self) -> bool {
        self.gr_start_epoch < self.max_epochs
    }

    /// Same configuration with reversal pushed past the last epoch.
    pub fn without_reversal(&self) -> TrainConfig {
        TrainConfig {
            gr_start_epoch: self.gr_start_epoch.max(self.max_epochs),
            ..*self
        }
    }
}

/// Per-epoch row order. Each epoch draws a fresh shuffle of `0..n` from a
/// ChaCha8 stream seeded with the training seed, so batches are re-formed
/// every epoch.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    rng: ChaCha8Rng,
}

impl BatchSchedule {
    pub fn new(seed: u64) -> Self {
        BatchSchedule {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_epoch(&mut self, n_rows: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n_rows).collect();
        idx.shuffle(&mut self.rng);
        idx
    }
}

/// Gradients of one batch retained for a possible reversal.
#[derive(Debug, Clone)]
pub struct GradientRecord {
    pub batch_id: usize,
    pub score: f64,
    pub gradients: Gradients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Row-weighted mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    /// One score per batch, in processing order. Empty before the start epoch.
    pub gradient_scores: Vec<f64>,
    pub max_gradient_score: Option<f64>,
    pub reversed_batch: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }

    pub fn reversals(&self) -> usize {
        self.epochs.iter().filter(|e| e.reversed_batch.is_some()).count()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.epochs
            .iter()
            .find(|e| e.epoch == self.best_epoch)
            .map(|e| e.val_loss)
    }
}

/// Train `net` with minibatch SGD plus end-of-epoch gradient reversal.
///
/// Returns the parameters with the lowest validation loss seen at any
/// epoch end. Early stopping counts epochs since the validation loss last
/// dropped by more than `min_improvement`.
pub fn train(
    mut net: Network,
    train_data: &Dataset,
    val_data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    let n = train_data.n_rows();
    if n == 0 {
        return Err(Error::Config("empty training set".into()));
    }
    if val_data.n_rows() == 0 {
        return Err(Error::Config("empty validation set".into()));
    }
    for (what, d) in [("training", train_data), ("validation", val_data)] {
        if d.n_features() != net.n_inputs() {
            return Err(Error::Dimension(format!(
                "{what} data has {} features, network expects {}",
                d.n_features(),
                net.n_inputs()
            )));
        }
    }

    let batch_size = cfg.effective_batch_size(n);
    let lr = cfg.learning_rate;
    let mut schedule = BatchSchedule::new(cfg.seed);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Network)> = None;
    let mut reference_loss = f64::INFINITY;
    let mut stale_epochs = 0;

    for epoch in 1..=cfg.max_epochs {
        let reversal_epoch = epoch > cfg.gr_start_epoch;
        let order = schedule.next_epoch(n);
        let mut loss_sum = 0.0;
        let mut scores = Vec::new();
        let mut top: Option<GradientRecord> = None;

        for (batch_id, rows) in order.chunks(batch_size).enumerate() {
            let batch = train_data.features.select(Axis(0), rows);
            let (loss, grads) = net.loss_and_gradients(batch.view())?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_id,
                    loss,
                });
            }
            loss_sum += loss * rows.len() as f64;
            if reversal_epoch {
                let score = gradient_score(grads.bottleneck_weights());
                scores.push(score);
                // strict: ties keep the lowest batch id
                if top.as_ref().is_none_or(|r| score > r.score) {
                    top = Some(GradientRecord {
                        batch_id,
                        score,
                        gradients: grads.clone(),
                    });
                }
            }
            net.sgd_step(&grads, lr)?;
        }

        let reversed_batch = match &top {
            Some(rec) => {
                net.reverse_step(&rec.gradients, lr)?;
                Some(rec.batch_id)
            }
            None => None,
        };

        let val_loss = net.loss(val_data.features.view())?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
                loss: val_loss,
            });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            val_loss,
            gradient_scores: scores,
            max_gradient_score: top.as_ref().map(|r| r.score),
            reversed_batch,
        });
        log::debug!("epoch {epoch}: val_loss {val_loss:.6}");

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, net.clone()));
            history.best_epoch = epoch;
        }
        if val_loss < reference_loss - cfg.min_improvement {
            reference_loss = val_loss;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                history.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }

    let (_, best_net) = best.expect("at least one epoch ran");
    Ok((best_net, history))
}
