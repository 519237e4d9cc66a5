//! The file-based workflow behind the `aegr` binary: prepare a CSV, run a
//! few variants over several seeds, then export plot data.
//!
//! ```bash
//! cargo run -p aegr --example experiment_workflow
//! ```

use std::io::Write;

use aegr::autoencoder::TrainConfig;
use aegr::data::{ColumnKind, Schema};
use aegr::experiment::{cmd_plotdata, cmd_prepare, cmd_run, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small flow-record table: two numeric columns, a protocol column and a
/// text label.
fn write_flows(path: &std::path::Path) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "duration,bytes,proto,class")?;
    for i in 0..300 {
        let attack = i % 25 == 0;
        let shift = if attack { 6.0 } else { 0.0 };
        let proto = ["tcp", "udp", "icmp"][rng.random_range(0..3)];
        writeln!(
            f,
            "{:.4},{:.4},{proto},{}",
            rng.random_range(0.0..1.0) + shift,
            rng.random_range(0.0..1.0) * 2.0 - shift,
            if attack { "attack" } else { "normal" }
        )?;
    }
    f.flush()
}

pub fn run_example() -> aegr::Result<()> {
    let dir = std::env::temp_dir().join(format!("aegr-workflow-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| aegr::Error::io(&dir, e))?;
    let csv = dir.join("flows.csv");
    write_flows(&csv).map_err(|e| aegr::Error::io(&csv, e))?;

    let mut cfg = ExperimentConfig::new(&csv);
    cfg.schema = Schema {
        normal_labels: Some(vec!["normal".into()]),
        ..Schema::default()
    }
    .with_column("proto", ColumnKind::Categorical)
    .with_column("class", ColumnKind::Label);
    cfg.train = TrainConfig { max_epochs: 15, ..TrainConfig::default() };
    cfg.variants = ["lof_raw", "ae_lof", "aegr_lof_prune"].map(String::from).to_vec();
    cfg.seeds = (0..5).collect();
    cfg.comparisons = vec![("aegr_lof_prune".into(), "ae_lof".into())];
    cfg.out_dir = dir.join("out");
    cfg.validate()?;

    let manifest = cmd_prepare(&cfg)?;
    println!("{manifest}");
    let report = cmd_run(&cfg, 2)?;
    println!("{}", report.to_markdown());
    let plot = cmd_plotdata(&cfg)?;
    println!("plot data for {} seed {}: {} points, {} curves", plot.variant, plot.seed, plot.points, plot.curves.len());

    for f in ["report.json", "report.md", "latent_scatter.csv", "kde_curves.csv"] {
        assert!(cfg.out_dir.join(f).is_file(), "{f} missing");
    }
    std::fs::remove_dir_all(&dir).map_err(|e| aegr::Error::io(&dir, e))?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
