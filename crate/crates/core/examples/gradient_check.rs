//! Compare backpropagated gradients with central finite differences.
//!
//! ```bash
//! cargo run -p aegr --example gradient_check
//! ```

use aegr::autoencoder::build_architecture;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> aegr::Result<()> {
    let n = 6;
    let mut net = build_architecture(n, 3)?;
    println!("widths {:?}, {} parameters", net.widths(), net.n_parameters());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let batch = Array2::from_shape_fn((5, n), |_| rng.random_range(-1.0..1.0));
    let (_, grads) = net.loss_and_gradients(batch.view())?;
    let analytic = grads.flat();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for li in 0..net.layers().len() {
        let (rows, cols) = net.layers()[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let orig = net.layers()[li].weights[[r, c]];
                net.layers_mut()[li].weights[[r, c]] = orig + h;
                let up = net.loss(batch.view())?;
                net.layers_mut()[li].weights[[r, c]] = orig - h;
                let down = net.loss(batch.view())?;
                net.layers_mut()[li].weights[[r, c]] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[idx];
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
                idx += 1;
            }
        }
        // biases follow each layer's weights in the flat layout
        idx += net.layers()[li].bias.len();
    }
    println!("largest relative weight-gradient error: {worst:.2e}");
    assert!(worst < 1e-4);
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
