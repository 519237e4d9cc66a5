//! Undercomplete autoencoder with gradient reversal.
//!
//! The network is a stack of fully connected layers `[n, h, m, h, n]`
//! with tanh hidden units, an identity output and a SmoothL1
//! reconstruction loss. [`train`] runs minibatch SGD and, once past the
//! configured start epoch, scores each batch by the Frobenius norm of its
//! bottleneck weight gradient. At the end of every such epoch the update
//! of the highest-scoring batch is applied again with its sign flipped.

mod io;
mod network;
mod train;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

pub use io::{read_model, write_history_csv, write_model, ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use network::{
    bottleneck_width, build_architecture, hidden_width, Activation, Forward, Gradients, Layer,
    LayerGrad, Network,
};
pub use train::{
    train, BatchSchedule, EpochRecord, GradientRecord, TrainConfig, TrainHistory,
};

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// SmoothL1 of a single residual: quadratic below 1, linear above.
#[inline]
pub fn smooth_l1(e: f64) -> f64 {
    let a = e.abs();
    if a < 1.0 {
        0.5 * e * e
    } else {
        a - 0.5
    }
}

/// Mean elementwise SmoothL1 between `output` and `target`.
pub fn smooth_l1_loss(output: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
    if output.dim() != target.dim() {
        return Err(Error::Dimension(format!(
            "output {:?} vs target {:?}",
            output.dim(),
            target.dim()
        )));
    }
    let n = output.len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = output
        .iter()
        .zip(target.iter())
        .map(|(o, t)| smooth_l1(o - t))
        .sum();
    Ok(sum / n as f64)
}

/// d(mean SmoothL1)/d(output).
pub(crate) fn smooth_l1_grad(output: ArrayView2<f64>, target: ArrayView2<f64>) -> Array2<f64> {
    let n = output.len() as f64;
    let mut g = &output - &target;
    g.mapv_inplace(|e| e.clamp(-1.0, 1.0) / n);
    g
}

/// Frobenius norm.
pub fn gradient_score(grads: ArrayView2<f64>) -> f64 {
    grads.iter().map(|x| x * x).sum::<f64>().sqrt()
}
