//! Independent reference implementations and data generators for the
//! integration tests. Nothing here calls into the code it checks, except
//! for the network primitives the reference trainer is built from.
#![allow(dead_code)]

use aegr::autoencoder::{BatchSchedule, Network, TrainConfig};
use aegr::data::Dataset;
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random_range(lo..hi))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// LOF straight from the definitions, no caching and no shared helpers.
pub fn naive_lof(reference: &Array2<f64>, queries: &Array2<f64>, k: usize) -> Vec<f64> {
    let pts: Vec<Vec<f64>> = reference.rows().into_iter().map(|r| r.to_vec()).collect();
    let n = pts.len();

    // k-distance and neighbourhood of x among the reference points,
    // skipping index `skip`
    let neighbourhood = |x: &[f64], skip: Option<usize>| -> (f64, Vec<usize>) {
        let mut ds: Vec<(f64, usize)> = (0..n)
            .filter(|&j| Some(j) != skip)
            .map(|j| (dist(x, &pts[j]), j))
            .collect();
        ds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let kd = ds[k - 1].0;
        let members = ds.iter().filter(|(d, _)| *d <= kd).map(|(_, j)| *j).collect();
        (kd, members)
    };

    let ref_nb: Vec<(f64, Vec<usize>)> = (0..n).map(|i| neighbourhood(&pts[i], Some(i))).collect();
    let lrd_of = |x: &[f64], members: &[usize]| -> f64 {
        let mut sum = 0.0;
        for &o in members {
            let reach = ref_nb[o].0.max(dist(x, &pts[o]));
            sum += reach;
        }
        if sum == 0.0 {
            1e10
        } else {
            members.len() as f64 / sum
        }
    };
    let ref_lrd: Vec<f64> = (0..n).map(|i| lrd_of(&pts[i], &ref_nb[i].1)).collect();

    queries
        .rows()
        .into_iter()
        .map(|q| {
            let q = q.to_vec();
            let (_, members) = neighbourhood(&q, None);
            let lrd_q = lrd_of(&q, &members);
            members.iter().map(|&o| ref_lrd[o] / lrd_q).sum::<f64>() / members.len() as f64
        })
        .collect()
}

/// Fraction of (positive, negative) pairs ranked correctly, ties half.
pub fn brute_roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let (mut p, mut q) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            p += 1;
        } else {
            q += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / (p * q) as f64
}

/// Average precision by walking distinct thresholds from the top.
pub fn brute_average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    let total_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let flagged: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = flagged.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let recall = tp / total_pos;
        let precision = tp / flagged.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Exact two-sided and upper-tail Wilcoxon p-values by enumerating every
/// sign pattern, using plain f64 tie-averaged ranks.
pub fn exact_wilcoxon(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let ranks: Vec<f64> = d
        .iter()
        .map(|x| {
            let less = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let w: f64 = d
        .iter()
        .zip(&ranks)
        .map(|(x, r)| if *x > 0.0 { *r } else { -*r })
        .sum();
    let (mut two, mut upper) = (0u64, 0u64);
    for mask in 0..(1u64 << n) {
        let s: f64 = (0..n)
            .map(|i| if mask & (1 << i) != 0 { ranks[i] } else { -ranks[i] })
            .sum();
        if s.abs() >= w.abs() - 1e-9 {
            two += 1;
        }
        if s >= w - 1e-9 {
            upper += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (w, two as f64 / total, upper as f64 / total)
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central-difference gradient of the batch loss for every parameter, in
/// the layout of `Network::flat_parameters`.
pub fn numeric_gradient(net: &Network, batch: &Array2<f64>, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = net.clone();
    let loss = |n: &Network| n.loss(batch.view()).unwrap();
    for li in 0..net.layers().len() {
        let (rows, cols) = net.layers()[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let orig = probe.layers()[li].weights[[r, c]];
                probe.layers_mut()[li].weights[[r, c]] = orig + h;
                let up = loss(&probe);
                probe.layers_mut()[li].weights[[r, c]] = orig - h;
                let down = loss(&probe);
                probe.layers_mut()[li].weights[[r, c]] = orig;
                out.push((up - down) / (2.0 * h));
            }
        }
        for b in 0..net.layers()[li].bias.len() {
            let orig = probe.layers()[li].bias[b];
            probe.layers_mut()[li].bias[b] = orig + h;
            let up = loss(&probe);
            probe.layers_mut()[li].bias[b] = orig - h;
            let down = loss(&probe);
            probe.layers_mut()[li].bias[b] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// Plain minibatch SGD with the same shuffling, checkpointing and early
/// stopping rules as the library trainer, but no gradient reversal.
pub fn reference_sgd(mut net: Network, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Network {
    let n = train.n_rows();
    let bs = cfg.batch_size.unwrap_or(if n > 2000 { 64 } else { 16 });
    let mut schedule = BatchSchedule::new(cfg.seed);
    let mut best: Option<(f64, Network)> = None;
    let mut reference = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..cfg.max_epochs {
        let order = schedule.next_epoch(n);
        for rows in order.chunks(bs) {
            let batch = train.features.select(Axis(0), rows);
            let (_, g) = net.loss_and_gradients(batch.view()).unwrap();
            net.sgd_step(&g, cfg.learning_rate).unwrap();
        }
        let v = net.loss(val.features.view()).unwrap();
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, net.clone()));
        }
        if v < reference - cfg.min_improvement {
            reference = v;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    best.unwrap().1
}

/// Normal points on a 2-D Gaussian blob linearly embedded in `dim`
/// dimensions with small isotropic noise, plus anomalies displaced in a
/// random direction by `far` times the RMS radius of the normal cloud.
/// Rows are shuffled; label 1 marks anomalies.
pub fn embedded_blob(n_normal: usize, n_anomalies: usize, dim: usize, far: f64, seed: u64) -> Dataset {
    const NOISE_SD: f64 = 0.05;
    let mut r = rng(seed);
    let basis: Array2<f64> = Array2::from_shape_fn((2, dim), |_| {
        let z: f64 = StandardNormal.sample(&mut r);
        z
    }) / (dim as f64).sqrt();
    let rms_radius = (basis.mapv(|v| v * v).sum() + dim as f64 * NOISE_SD * NOISE_SD).sqrt();
    let noise = Normal::new(0.0, NOISE_SD).unwrap();
    let mut rows: Vec<(Vec<f64>, u8)> = Vec::new();
    for i in 0..n_normal + n_anomalies {
        let u: [f64; 2] = [StandardNormal.sample(&mut r), StandardNormal.sample(&mut r)];
        let mut x: Vec<f64> = (0..dim)
            .map(|j| u[0] * basis[[0, j]] + u[1] * basis[[1, j]] + noise.sample(&mut r))
            .collect();
        let label = (i >= n_normal) as u8;
        if label == 1 {
            let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
            for (v, d) in x.iter_mut().zip(&dir) {
                *v += far * rms_radius * d / norm;
            }
        }
        rows.push((x, label));
    }
    for i in (1..rows.len()).rev() {
        let j = r.random_range(0..=i);
        rows.swap(i, j);
    }
    let features = Array2::from_shape_fn((rows.len(), dim), |(i, j)| rows[i].0[j]);
    let labels = rows.iter().map(|(_, l)| *l).collect();
    let names = (0..dim).map(|j| format!("x{j}")).collect();
    Dataset::new(features, Some(labels), names).unwrap()
}

/// Writes `data` as a headered CSV with a `label` column.
pub fn write_labelled_csv(path: &std::path::Path, data: &Dataset) {
    let f = std::fs::File::create(path).unwrap();
    data.write_csv(f).unwrap();
}
