//! Reconstruction-error pruning of latent points, then noisy augmentation.
//!
//! ```bash
//! cargo run -p aegr --example prune_and_augment
//! ```

use aegr::pipeline::{augment, check_prune_contract, prune};
use ndarray::Array2;

pub fn run_example() -> aegr::Result<()> {
    let latents = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64 * 0.1);
    let res = [0.1, 0.2, 0.1, 3.0, 0.15, 0.2, 2.5, 0.1, 0.12, 0.18];

    let (kept, mask) = prune(&latents, &res)?;
    check_prune_contract(&res, &mask)?;
    let dropped: Vec<usize> = (0..res.len()).filter(|&i| !mask[i]).collect();
    println!("kept {} of {} rows, dropped {dropped:?}", kept.nrows(), res.len());
    assert_eq!(dropped, vec![3, 6]);

    let grown = augment(&kept, 2.0, 0.1, 42)?;
    println!("augmented to {} rows", grown.nrows());
    assert_eq!(grown.nrows(), 2 * kept.nrows());
    assert_eq!(grown.slice(ndarray::s![..kept.nrows(), ..]), kept);
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
