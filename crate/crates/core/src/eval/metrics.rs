use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Metric("labels must be 0 or 1".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((n_pos, labels.len() - n_pos))
}

/// Indices sorted by score, grouped into blocks of equal score.
fn tie_blocks(scores: &[f64], descending: bool) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match blocks.last_mut() {
            Some(b) if scores[b[0]] == scores[i] => b.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (normalized Mann–Whitney U).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric(format!(
            "roc auc needs both classes (positives {n_pos}, negatives {n_neg})"
        )));
    }
    // Sum of (1-based, tie-averaged) ranks of the positives, doubled to stay integral.
    let mut rank_sum2: u64 = 0;
    let mut start = 0u64;
    for block in tie_blocks(scores, false) {
        let len = block.len() as u64;
        // ranks start+1 ..= start+len, average doubled = 2*start + len + 1
        let avg2 = 2 * start + len + 1;
        let pos = block.iter().filter(|&&i| labels[i] == 1).count() as u64;
        rank_sum2 += avg2 * pos;
        start += len;
    }
    let (p, q) = (n_pos as u64, n_neg as u64);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / 2.0 / (p * q) as f64)
}

/// Average precision: sum over score thresholds of precision times the
/// recall gained at that threshold. Tied scores form one threshold.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_pos, _) = check(scores, labels)?;
    if n_pos == 0 {
        return Err(Error::Metric("pr auc needs at least one positive".into()));
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for block in tie_blocks(scores, true) {
        let pos = block.iter().filter(|&&i| labels[i] == 1).count();
        tp += pos;
        seen += block.len();
        if pos > 0 {
            ap += (tp as f64 / seen as f64) * (pos as f64 / n_pos as f64);
        }
    }
    Ok(ap)
}

pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<MetricResult> {
    let (n_pos, n_neg) = check(scores, labels)?;
    Ok(MetricResult {
        roc_auc: roc_auc(scores, labels)?,
        pr_auc: pr_auc(scores, labels)?,
        n_pos,
        n_neg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// One point per distinct score, predicting positive for `score >= threshold`.
pub fn curve_points(scores: &[f64], labels: &[u8]) -> Result<Vec<CurvePoint>> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("curve needs both classes".into()));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut out = Vec::new();
    for block in tie_blocks(scores, true) {
        let pos = block.iter().filter(|&&i| labels[i] == 1).count();
        tp += pos;
        fp += block.len() - pos;
        out.push(CurvePoint {
            threshold: scores[block[0]],
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / n_pos as f64,
            tpr: tp as f64 / n_pos as f64,
            fpr: fp as f64 / n_neg as f64,
        });
    }
    Ok(out)
}

pub fn write_curve_csv<W: std::io::Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<curve csv>", e))?;
    Ok(())
}
