//! Model files and training-history export.
//!
//! A model file is a JSON document:
//!
//! ```text
//! { "format": "aegr-model", "version": 1,
//!   "widths": [n, h, m, h, n],
//!   "layers": [ { "activation": "tanh", "weights": [[..], ..], "bias": [..],
//!                 "weight_carry": [[..], ..], "bias_carry": [..] }, .. ],
//!   "norm": { "min": [..], "max": [..] } | null }
//! ```
//!
//! Floats are written in shortest round-trip form, so a written model
//! reads back bit-identical.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Network, TrainHistory};
use crate::data::NormParams;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "aegr-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerFile {
    activation: Activation,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    weight_carry: Vec<Vec<f64>>,
    bias_carry: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    format: String,
    version: u32,
    widths: Vec<usize>,
    layers: Vec<LayerFile>,
    norm: Option<NormParams>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>], shape: (usize, usize)) -> Result<Array2<f64>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::Format(format!("matrix is not {}x{}", shape.0, shape.1)));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec(shape, flat).map_err(|e| Error::Format(e.to_string()))
}

impl ModelFile {
    pub fn new(net: &Network, norm: Option<&NormParams>) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            widths: net.widths(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation,
                    weights: rows(&l.weights),
                    bias: l.bias.to_vec(),
                    weight_carry: rows(&l.weight_carry),
                    bias_carry: l.bias_carry.to_vec(),
                })
                .collect(),
            norm: norm.cloned(),
        }
    }

    pub fn into_parts(self) -> Result<(Network, Option<NormParams>)> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Format(format!("unknown format '{}'", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                self.version
            )));
        }
        if self.widths.len() != self.layers.len() + 1 {
            return Err(Error::Format("widths do not match layer count".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, lf) in self.layers.into_iter().enumerate() {
            let shape = (self.widths[i + 1], self.widths[i]);
            let mut layer = Layer::new(
                matrix(&lf.weights, shape)?,
                Array1::from(lf.bias),
                lf.activation,
            )?;
            layer.weight_carry = matrix(&lf.weight_carry, shape)?;
            if lf.bias_carry.len() != shape.0 {
                return Err(Error::Format("bias carry length mismatch".into()));
            }
            layer.bias_carry = Array1::from(lf.bias_carry);
            layers.push(layer);
        }
        let net = Network::from_layers(layers)?;
        if let Some(norm) = &self.norm {
            if norm.width() != net.n_inputs() {
                return Err(Error::Format("normalization width differs from input width".into()));
            }
        }
        Ok((net, self.norm))
    }
}

pub fn write_model<W: Write>(writer: W, net: &Network, norm: Option<&NormParams>) -> Result<()> {
    serde_json::to_writer(writer, &ModelFile::new(net, norm))?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<(Network, Option<NormParams>)> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    file.into_parts()
}

/// CSV with columns `epoch,train_loss,val_loss,max_gs,reversal_applied`.
/// `max_gs` is empty for epochs without gradient scoring.
pub fn write_history_csv<W: Write>(writer: W, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "train_loss", "val_loss", "max_gs", "reversal_applied"])?;
    for e in &history.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.val_loss.to_string(),
            e.max_gradient_score.map(|s| s.to_string()).unwrap_or_default(),
            e.reversed_batch.is_some().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<history csv>", e))?;
    Ok(())
}
