//! Evaluation metrics: held-out log-ratio RMSE and Kendall's tau-b.

use crate::embed::{predict_pairs, EmbeddingModel};
use crate::error::{Error, Result};
use crate::pcm::{ComparisonSet, Gauge, ObservationMode, ScoreVector};

/// Source of predicted log-ratios.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Scores(&'a ScoreVector),
    /// A trained model message-passing over the graph it was trained on.
    /// Pairs whose endpoints lie in different components of that graph are
    /// predicted from `scores` instead, so both methods share the same
    /// per-component zero-mean gauge where the data carry no information.
    Model {
        model: &'a EmbeddingModel,
        graph: &'a ComparisonSet,
        scores: &'a ScoreVector,
    },
}

/// Root mean squared error between predicted log-ratios and `ln a_ij` over
/// the entries of `test`.
pub fn rmse_log_ratios(predicted: Predictor<'_>, test: &ComparisonSet) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyObservations);
    }
    test.require(ObservationMode::Cardinal, "rmse_log_ratios")?;
    let pairs: Vec<(usize, usize)> = test.edges().iter().map(|e| (e.i, e.j)).collect();
    let t = match predicted {
        Predictor::Scores(x) => {
            if x.n() != test.n() {
                return Err(Error::InvalidInput("score vector and test set sizes differ".into()));
            }
            pairs.iter().map(|&(i, j)| x.log_ratio(i, j)).collect()
        }
        Predictor::Model { model, graph, scores } => {
            let mut t = predict_pairs(model, graph, &pairs)?;
            if let Gauge::ZeroMeanPerComponent(labels) = scores.gauge() {
                for (y, &(i, j)) in t.iter_mut().zip(&pairs) {
                    if labels[i] != labels[j] {
                        *y = scores.log_ratio(i, j);
                    }
                }
            }
            t
        }
    };
    let sse: f64 = test
        .edges()
        .iter()
        .zip(t)
        .map(|(e, y)| (y - e.value.ln()).powi(2))
        .sum();
    Ok((sse / test.len() as f64).sqrt())
}

/// Kendall's tau-b between two score vectors.
pub fn kendall_tau(est: &ScoreVector, truth: &ScoreVector) -> Result<f64> {
    kendall_tau_b(est.scores(), truth.scores())
}

/// Kendall's tau-b (tie corrected) in `O(n log n)`: sort by `(a, b)`, then
/// count the discordant pairs as merge-sort exchanges on `b`. All counts are
/// exact integers.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("Kendall's tau needs at least two items".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("scores must not be NaN".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&p, &q| a[p].total_cmp(&a[q]).then(b[p].total_cmp(&b[q])));
    let pairs = |t: u64| t * (t - 1) / 2;
    let total = pairs(n as u64);
    let (mut ties_a, mut ties_ab) = (0u64, 0u64);
    let (mut run_a, mut run_ab) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (p, q) = (w[0], w[1]);
        if a[p] == a[q] {
            run_a += 1;
            if b[p] == b[q] {
                run_ab += 1;
            } else {
                ties_ab += pairs(run_ab);
                run_ab = 1;
            }
        } else {
            ties_a += pairs(run_a);
            ties_ab += pairs(run_ab);
            run_a = 1;
            run_ab = 1;
        }
    }
    ties_a += pairs(run_a);
    ties_ab += pairs(run_ab);

    let mut seq: Vec<f64> = idx.iter().map(|&k| b[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut seq, &mut buf);

    let mut ties_b = 0u64;
    let mut run_b = 1u64;
    for w in seq.windows(2) {
        if w[0] == w[1] {
            run_b += 1;
        } else {
            ties_b += pairs(run_b);
            run_b = 1;
        }
    }
    ties_b += pairs(run_b);

    let denom_a = total - ties_a;
    let denom_b = total - ties_b;
    if denom_a == 0 || denom_b == 0 {
        return Err(Error::DegenerateRanking("one of the score vectors is constant".into()));
    }
    let numer = total as i128 - ties_a as i128 - ties_b as i128 + ties_ab as i128 - 2 * swaps as i128;
    Ok(tau_from_counts(numer, denom_a, denom_b))
}

/// `numer / sqrt(denom_a * denom_b)`, with the product formed exactly so
/// that perfectly (anti)correlated inputs give exactly `+-1`.
pub fn tau_from_counts(numer: i128, denom_a: u64, denom_b: u64) -> f64 {
    let root = ((denom_a as u128 * denom_b as u128) as f64).sqrt();
    (numer as f64 / root).clamp(-1.0, 1.0)
}

/// Sort ascending, returning the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut l, mut r, mut k) = (0, mid, 0);
    while l < mid && r < n {
        if v[r] < v[l] {
            buf[k] = v[r];
            swaps += (mid - l) as u64;
            r += 1;
        } else {
            buf[k] = v[l];
            l += 1;
        }
        k += 1;
    }
    buf[k..k + mid - l].copy_from_slice(&v[l..mid]);
    k += mid - l;
    buf[k..k + n - r].copy_from_slice(&v[r..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
