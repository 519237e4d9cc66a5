//! Silverman-bandwidth kernel density estimates of latent coordinates.
//!
//! ```bash
//! cargo run -p aegr --example latent_density
//! ```

use aegr::experiment::kde_curves;
use aegr::kde::{silverman_bandwidth, trapezoid};
use ndarray::Array2;

pub fn run_example() -> aegr::Result<()> {
    let latents = Array2::from_shape_fn((60, 3), |(i, j)| ((i * 37 + j * 11) % 60) as f64 / 60.0 + if i >= 54 { 2.0 } else { 0.0 });
    let labels: Vec<u8> = (0..60).map(|i| (i >= 54) as u8).collect();

    let col: Vec<f64> = latents.column(0).to_vec();
    println!("bandwidth of axis 1, all rows: {:.4}", silverman_bandwidth(&col));

    for c in kde_curves(&latents, Some(&labels))? {
        println!(
            "axis {} {:<7} h = {:.4}, {} grid points, integral {:.4}",
            c.axis,
            c.class.as_str(),
            c.bandwidth,
            c.points.len(),
            trapezoid(&c.points)
        );
        assert!((trapezoid(&c.points) - 1.0).abs() < 0.01);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
