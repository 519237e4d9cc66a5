//! Train the autoencoder with gradient reversal, inspect the epoch history
//! and round-trip the trained model through JSON.
//!
//! ```bash
//! cargo run -p aegr --example train_with_reversal
//! ```

use aegr::autoencoder::{build_architecture, read_model, train, write_history_csv, write_model, TrainConfig};
use aegr::data::{split, Dataset, NormParams, SplitSpec};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Points near a line in 8 dimensions.
fn line_data(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut t = Vec::with_capacity(n);
    for _ in 0..n {
        t.push(noise.sample(&mut rng) * 20.0);
    }
    let features = Array2::from_shape_fn((n, 8), |(i, j)| t[i] * (j as f64 + 1.0) / 8.0 + noise.sample(&mut rng));
    Dataset::from_features(features)
}

pub fn run_example() -> aegr::Result<()> {
    let data = line_data(400, 1);
    let (train_raw, val_raw, _) = split(&data, &SplitSpec::default())?;
    let norm = NormParams::fit(&train_raw)?;
    let (train_set, val_set) = (norm.apply(&train_raw)?, norm.apply(&val_raw)?);

    let cfg = TrainConfig {
        max_epochs: 30,
        gr_start_epoch: 5,
        seed: 7,
        ..TrainConfig::default()
    };
    let net = build_architecture(train_set.n_features(), 7)?;
    println!("architecture {:?}", net.widths());
    let (net, history) = train(net, &train_set, &val_set, &cfg)?;

    println!(
        "{} epochs, {} reversals, best epoch {} (val loss {:.5})",
        history.epochs_run(),
        history.reversals(),
        history.best_epoch,
        history.best_val_loss().unwrap_or(f64::NAN)
    );
    for e in history.epochs.iter().filter(|e| e.reversed_batch.is_some()).take(3) {
        println!(
            "  epoch {:>2}: reversed batch {} of {} (gradient score {:.4})",
            e.epoch,
            e.reversed_batch.unwrap(),
            e.gradient_scores.len(),
            e.max_gradient_score.unwrap()
        );
    }
    let mut csv = Vec::new();
    write_history_csv(&mut csv, &history)?;
    println!("history csv: {} lines", String::from_utf8_lossy(&csv).lines().count());

    let mut json = Vec::new();
    write_model(&mut json, &net, Some(&norm))?;
    let (restored, restored_norm) = read_model(json.as_slice())?;
    assert_eq!(restored.flat_parameters(), net.flat_parameters());
    assert!(restored_norm.is_some());
    let re = restored.reconstruction_error(&val_set)?;
    println!("mean validation reconstruction error {:.5}", re.iter().sum::<f64>() / re.len() as f64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
