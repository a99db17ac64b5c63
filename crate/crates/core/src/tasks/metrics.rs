use log::warn;
use serde::{Deserialize, Serialize};

use super::split::LinkLabel;
use super::TaskError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// `None` when only one sign occurs among the true links.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len();
        if n == 0 {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

/// `P(+) / (P(+) + P(−))` under a softmax over the three logits.
pub fn sign_score(logits: &[f64]) -> f64 {
    1.0 / (1.0 + (logits[1] - logits[0]).exp())
}

/// Sign-classification metrics over the rows whose truth is a link.
///
/// F1 scores cover the classes `+` and `−`; a `?` prediction counts as a
/// miss for the true class. `scores` are positive-class scores (see
/// [`sign_score`]) used for the ROC AUC.
pub fn compute_metrics(
    predictions: &[LinkLabel],
    truths: &[LinkLabel],
    scores: &[f64],
) -> Result<LinkMetrics, TaskError> {
    if predictions.len() != truths.len() || scores.len() != truths.len() {
        return Err(TaskError::Metrics(format!(
            "misaligned inputs: {} predictions, {} truths, {} scores",
            predictions.len(),
            truths.len(),
            scores.len()
        )));
    }
    let rows: Vec<usize> = (0..truths.len())
        .filter(|&k| truths[k] != LinkLabel::NoLink)
        .collect();
    if rows.is_empty() {
        return Err(TaskError::Metrics("no true links to evaluate".into()));
    }
    let correct = rows
        .iter()
        .filter(|&&k| predictions[k] == truths[k])
        .count();
    let accuracy = correct as f64 / rows.len() as f64;

    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    let mut f1s = [0.0; 2];
    for (slot, class) in [LinkLabel::Positive, LinkLabel::Negative]
        .into_iter()
        .enumerate()
    {
        let tp = rows
            .iter()
            .filter(|&&k| truths[k] == class && predictions[k] == class)
            .count();
        let fp = rows
            .iter()
            .filter(|&&k| truths[k] != class && predictions[k] == class)
            .count();
        let fn_ = rows
            .iter()
            .filter(|&&k| truths[k] == class && predictions[k] != class)
            .count();
        let denom = 2 * tp + fp + fn_;
        f1s[slot] = if denom == 0 {
            warn!("class {class:?} is absent from both truth and prediction; its F1 is set to 0");
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        };
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    let micro_f1 = tp_all as f64 / (tp_all as f64 + 0.5 * (fp_all + fn_all) as f64);
    let macro_f1 = (f1s[0] + f1s[1]) / 2.0;

    let labels: Vec<bool> = rows
        .iter()
        .map(|&k| truths[k] == LinkLabel::Positive)
        .collect();
    let s: Vec<f64> = rows.iter().map(|&k| scores[k]).collect();
    Ok(LinkMetrics {
        accuracy,
        macro_f1,
        micro_f1,
        auc: roc_auc(&s, &labels),
    })
}

/// Mann-Whitney form of the ROC AUC with mid-ranks for ties.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of `predictions[k] == truths[k]`.
pub fn accuracy(predictions: &[usize], truths: &[usize]) -> f64 {
    if truths.is_empty() {
        return f64::NAN;
    }
    predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count() as f64
        / truths.len() as f64
}
