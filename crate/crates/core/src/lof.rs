//! Exact Local Outlier Factor in novelty mode.
//!
//! A [`LofModel`] is fitted on a reference set; every reference point's
//! k-distance, neighbourhood (itself excluded, ties at the k-distance all
//! included) and local reachability density are cached. Query points are
//! scored against the reference set only and never see each other.
//!
//! Neighbour search is brute force over Euclidean distance.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// LRD used when every reachability distance in a neighbourhood is zero.
pub const LRD_EPSILON: f64 = 1e-10;

pub const DEFAULT_MIN_PTS: usize = 20;

pub fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub k_distance: f64,
    /// Reference indices ordered by (distance, index).
    pub members: Vec<usize>,
    /// Distances matching `members`.
    pub distances: Vec<f64>,
}

impl Neighborhood {
    fn from_candidates(mut cands: Vec<(f64, usize)>, min_pts: usize) -> Neighborhood {
        debug_assert!(cands.len() >= min_pts);
        let (_, kth, _) = cands.select_nth_unstable_by(min_pts - 1, |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        });
        let k_distance = kth.0;
        cands.retain(|c| c.0 <= k_distance);
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (distances, members) = cands.into_iter().unzip();
        Neighborhood {
            k_distance,
            members,
            distances,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LofModel {
    reference: Array2<f64>,
    min_pts: usize,
    neighborhoods: Vec<Neighborhood>,
    lrd: Vec<f64>,
}

impl LofModel {
    /// Fit on `reference` (rows are points). Requires `n > min_pts ≥ 1`.
    pub fn fit(reference: Array2<f64>, min_pts: usize) -> Result<LofModel> {
        let n = reference.nrows();
        if min_pts < 1 || n <= min_pts {
            return Err(Error::TooFewPoints { n, min_pts });
        }
        if reference.ncols() == 0 {
            return Err(Error::Dimension("reference points have zero width".into()));
        }
        if reference.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite reference coordinate".into()));
        }
        let neighborhoods: Vec<Neighborhood> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = reference.row(i);
                let cands = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (euclidean(p, reference.row(j)), j))
                    .collect();
                Neighborhood::from_candidates(cands, min_pts)
            })
            .collect();
        let k_dist: Vec<f64> = neighborhoods.iter().map(|nb| nb.k_distance).collect();
        let lrd = neighborhoods
            .iter()
            .map(|nb| density(nb, &k_dist))
            .collect();
        Ok(LofModel {
            reference,
            min_pts,
            neighborhoods,
            lrd,
        })
    }

    pub fn min_pts(&self) -> usize {
        self.min_pts
    }

    pub fn reference(&self) -> &Array2<f64> {
        &self.reference
    }

    pub fn n_reference(&self) -> usize {
        self.reference.nrows()
    }

    pub fn k_distance(&self, o: usize) -> f64 {
        self.neighborhoods[o].k_distance
    }

    pub fn reference_neighborhood(&self, o: usize) -> &Neighborhood {
        &self.neighborhoods[o]
    }

    pub fn reference_lrd(&self, o: usize) -> f64 {
        self.lrd[o]
    }

    fn check_query(&self, p: ArrayView1<f64>) -> Result<()> {
        if p.len() != self.reference.ncols() {
            return Err(Error::Dimension(format!(
                "query has {} coordinates, reference has {}",
                p.len(),
                self.reference.ncols()
            )));
        }
        Ok(())
    }

    /// Neighbourhood of an arbitrary point among all reference points.
    pub fn query_neighborhood(&self, p: ArrayView1<f64>) -> Result<Neighborhood> {
        self.check_query(p)?;
        let cands = self
            .reference
            .rows()
            .into_iter()
            .enumerate()
            .map(|(j, r)| (euclidean(p, r), j))
            .collect();
        Ok(Neighborhood::from_candidates(cands, self.min_pts))
    }

    /// `max(k-distance(o), d(p, o))`.
    pub fn reach_dist(&self, p: ArrayView1<f64>, o: usize) -> Result<f64> {
        self.check_query(p)?;
        Ok(self.k_distance(o).max(euclidean(p, self.reference.row(o))))
    }

    /// Local reachability density of a query point.
    pub fn lrd(&self, p: ArrayView1<f64>) -> Result<f64> {
        let nb = self.query_neighborhood(p)?;
        Ok(density(&nb, &self.k_distances()))
    }

    fn k_distances(&self) -> Vec<f64> {
        self.neighborhoods.iter().map(|n| n.k_distance).collect()
    }

    fn score_point(&self, p: ArrayView1<f64>, k_dist: &[f64]) -> f64 {
        let cands = self
            .reference
            .rows()
            .into_iter()
            .enumerate()
            .map(|(j, r)| (euclidean(p, r), j))
            .collect();
        let nb = Neighborhood::from_candidates(cands, self.min_pts);
        let lrd_p = density(&nb, k_dist);
        let sum: f64 = nb.members.iter().map(|&o| self.lrd[o] / lrd_p).sum();
        sum / nb.len() as f64
    }

    /// LOF of each query row. Higher means more anomalous.
    pub fn score(&self, queries: ArrayView2<f64>) -> Result<Vec<f64>> {
        if queries.ncols() != self.reference.ncols() {
            return Err(Error::Dimension(format!(
                "queries have {} columns, reference has {}",
                queries.ncols(),
                self.reference.ncols()
            )));
        }
        let k_dist = self.k_distances();
        let rows: Vec<_> = queries.rows().into_iter().collect();
        Ok(rows
            .into_par_iter()
            .map(|p| self.score_point(p, &k_dist))
            .collect())
    }

    /// LOF of each reference point among the others (outlier mode).
    pub fn reference_scores(&self) -> Vec<f64> {
        self.neighborhoods
            .iter()
            .enumerate()
            .map(|(i, nb)| {
                let sum: f64 = nb.members.iter().map(|&o| self.lrd[o] / self.lrd[i]).sum();
                sum / nb.len() as f64
            })
            .collect()
    }
}

fn density(nb: &Neighborhood, k_dist: &[f64]) -> f64 {
    let total: f64 = nb
        .members
        .iter()
        .zip(&nb.distances)
        .map(|(&o, &d)| k_dist[o].max(d))
        .sum();
    if total == 0.0 {
        1.0 / LRD_EPSILON
    } else {
        nb.len() as f64 / total
    }
}

/// CSV with columns `row_index,lof_score`.
pub fn write_scores_csv<W: std::io::Write>(writer: W, scores: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_index", "lof_score"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}
