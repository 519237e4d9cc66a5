//! Fit a novelty-mode LOF model on a dense cluster and score new points.
//!
//! ```bash
//! cargo run -p aegr --example lof_scores
//! ```

use aegr::lof::LofModel;
use ndarray::{array, Array2};

pub fn run_example() -> aegr::Result<()> {
    // 10 x 10 lattice with unit spacing
    let reference = Array2::from_shape_fn((100, 2), |(i, j)| if j == 0 { (i / 10) as f64 } else { (i % 10) as f64 });
    let model = LofModel::fit(reference, 8)?;

    let queries = array![[4.5, 4.5], [0.0, 0.0], [12.0, 4.5], [40.0, 40.0]];
    let scores = model.score(queries.view())?;
    for (q, s) in queries.rows().into_iter().zip(&scores) {
        println!("LOF({:>5.1}, {:>5.1}) = {s:.3}", q[0], q[1]);
    }
    assert!(scores[0] < 1.1, "interior point should look normal");
    assert!(scores[3] > scores[2] && scores[2] > 1.5, "scores should grow with distance");

    let inliers = model.reference_scores();
    let max = inliers.iter().cloned().fold(f64::MIN, f64::max);
    println!("largest reference LOF: {max:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> aegr::Result<()> {
    run_example()
}
