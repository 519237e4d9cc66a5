//! Run all eight detector/modification variants on one synthetic split and
//! print a PR/ROC table. Autoencoders are shared between variants that
//! need the same network.
//!
//! ```bash
//! cargo run -p aegr --example variant_matrix --release
//! ```

use aegr::autoencoder::TrainConfig;
use aegr::data::{split, Dataset, NormParams, SplitSpec};
use aegr::eval::evaluate;
use aegr::pipeline::{run_variants, Splits, VariantSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian cloud in 10 dimensions with a few points shifted far away.
fn cloud(n_normal: usize, n_anomalies: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_normal + n_anomalies;
    let mut features = Array2::from_shape_fn((n, 10), |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let mut labels = vec![0u8; n];
    for i in n_normal..n {
        labels[i] = 1;
        let axis = rng.random_range(0..10);
        features[[i, axis]] += 8.0;
    }
    let names = (0..10).map(|j| format!("f{j}")).collect();
    Dataset::new(features, Some(labels), names).unwrap()
}

pub fn run_example() -> aegr::Result<()> {
    let data = cloud(480, 20, 5);
    let (tr, va, te) = split(&data, &SplitSpec { seed: 3, ..SplitSpec::default() })?;
    let norm = NormParams::fit(&tr)?;
    let (tr, va, te) = (norm.apply(&tr)?, norm.apply(&va)?, norm.apply(&te)?);
    let splits = Splits { train: &tr, val: &va, test: &te };

    let cfg = TrainConfig { max_epochs: 25, ..TrainConfig::default() };
    let specs = VariantSpec::comparison_matrix(0);
    let results = run_variants(&specs, splits, &cfg, 10);

    println!("{:<26} {:<14} {:>7} {:>7}", "approach", "modification", "PR", "ROC");
    for (spec, res) in specs.iter().zip(results) {
        let run = res?;
        let m = evaluate(&run.scores, run.labels.as_deref().unwrap())?;
        println!(
            "{:<26} {:<14} {:>7.3} {:>7.3}",
            spec.detector.label(),
            spec.modifier.label(),
            m.pr_auc,
            m.roc_auc
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
