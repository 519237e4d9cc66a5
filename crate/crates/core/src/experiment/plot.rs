use std::fs::File;
use std::io::BufReader;

use ndarray::Array2;
use serde::Serialize;

use super::config::{canonical_variant, ExperimentConfig};
use super::run::latents_file_name;
use super::write_atomic;
use crate::error::{Error, Result};
use crate::kde::{DensityPoint, GaussianKde};
use crate::pipeline::{Detector, VariantSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotClass {
    Normal,
    Anomaly,
    /// Unlabelled training data.
    All,
}

impl PlotClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotClass::Normal => "normal",
            PlotClass::Anomaly => "anomaly",
            PlotClass::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KdeCurve {
    /// 1 or 2.
    pub axis: usize,
    pub class: PlotClass,
    pub bandwidth: f64,
    pub points: Vec<DensityPoint>,
}

/// Stored training latents of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTable {
    pub latents: Array2<f64>,
    pub labels: Option<Vec<u8>>,
    pub kept: Vec<bool>,
}

impl LatentTable {
    pub fn read<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let width = rdr.headers()?.len();
        if width < 3 {
            return Err(Error::Format("latents file needs z columns, label and kept".into()));
        }
        let m = width - 2;
        let (mut values, mut labels, mut kept) = (Vec::new(), Vec::new(), Vec::new());
        let mut labelled = true;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec[j].parse().map_err(|_| Error::Parse {
                    row: i,
                    column: format!("z{}", j + 1),
                    value: rec[j].to_string(),
                })
            };
            for j in 0..m {
                values.push(num(j)?);
            }
            match &rec[m] {
                "" => labelled = false,
                "0" => labels.push(0),
                "1" => labels.push(1),
                v => {
                    return Err(Error::Parse {
                        row: i,
                        column: "label".into(),
                        value: v.into(),
                    })
                }
            }
            kept.push(&rec[m + 1] == "1");
        }
        let n = kept.len();
        let latents =
            Array2::from_shape_vec((n, m), values).map_err(|e| Error::Dimension(e.to_string()))?;
        Ok(LatentTable {
            latents,
            labels: labelled.then_some(labels),
            kept,
        })
    }
}

/// Silverman-bandwidth KDE of each of the first two latent axes, split by
/// class. A class with no rows gets no curve and a warning.
pub fn kde_curves(latents: &Array2<f64>, labels: Option<&[u8]>) -> Result<Vec<KdeCurve>> {
    if latents.ncols() < 2 {
        return Err(Error::Dimension(format!(
            "need at least two latent dimensions, have {}",
            latents.ncols()
        )));
    }
    let classes: Vec<(PlotClass, Vec<usize>)> = match labels {
        Some(l) => [(PlotClass::Normal, 0u8), (PlotClass::Anomaly, 1u8)]
            .into_iter()
            .map(|(c, y)| (c, (0..l.len()).filter(|&i| l[i] == y).collect()))
            .collect(),
        None => vec![(PlotClass::All, (0..latents.nrows()).collect())],
    };
    let mut curves = Vec::new();
    for (class, rows) in &classes {
        if rows.is_empty() {
            log::warn!("no {} rows in the latents; skipping its density curves", class.as_str());
            continue;
        }
        for axis in 0..2 {
            let samples: Vec<f64> = rows.iter().map(|&i| latents[[i, axis]]).collect();
            let kde = GaussianKde::new(samples).expect("non-empty class");
            curves.push(KdeCurve {
                axis: axis + 1,
                class: *class,
                bandwidth: kde.bandwidth(),
                points: kde.curve(),
            });
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotSummary {
    pub variant: String,
    pub seed: u64,
    pub points: usize,
    pub curves: Vec<KdeCurve>,
}

fn plot_target(cfg: &ExperimentConfig) -> Result<(String, u64)> {
    let seed = cfg.plot.seed.unwrap_or(cfg.seeds[0]);
    if let Some(v) = &cfg.plot.variant {
        return Ok((canonical_variant(v)?, seed));
    }
    cfg.variant_specs(seed)?
        .iter()
        .find(|s| s.detector != Detector::LofRaw)
        .map(|s: &VariantSpec| (s.id(), seed))
        .ok_or_else(|| Error::Config("no autoencoder variant to plot".into()))
}

/// Turn the stored latents of the configured plot run into
/// `latent_scatter.csv` and `kde_curves.csv`.
pub fn cmd_plotdata(cfg: &ExperimentConfig) -> Result<PlotSummary> {
    let (variant, seed) = plot_target(cfg)?;
    let path = cfg.out_dir.join(latents_file_name(&variant, seed));
    let file = File::open(&path).map_err(|e| {
        Error::io(
            &path,
            std::io::Error::new(e.kind(), format!("{e}; run `run` first")),
        )
    })?;
    let table = LatentTable::read(BufReader::new(file))?;
    let curves = kde_curves(&table.latents, table.labels.as_deref())?;

    write_atomic(&cfg.out_dir.join("latent_scatter.csv"), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["latent_dim_1", "latent_dim_2", "label", "pruned_flag"])?;
        for i in 0..table.latents.nrows() {
            let label = table
                .labels
                .as_ref()
                .map(|l| l[i].to_string())
                .unwrap_or_default();
            out.write_record([
                table.latents[[i, 0]].to_string(),
                table.latents[[i, 1]].to_string(),
                label,
                (!table.kept[i] as u8).to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("latent_scatter.csv", e))
    })?;
    write_atomic(&cfg.out_dir.join("kde_curves.csv"), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["axis", "class", "x", "density"])?;
        for c in &curves {
            for p in &c.points {
                out.write_record([
                    c.axis.to_string(),
                    c.class.as_str().to_string(),
                    p.x.to_string(),
                    p.density.to_string(),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::io("kde_curves.csv", e))
    })?;
    Ok(PlotSummary {
        variant,
        seed,
        points: table.latents.nrows(),
        curves,
    })
}
