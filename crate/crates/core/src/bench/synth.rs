//! Synthetic comparison data and train/test splits.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcm::{Comparison, ComparisonSet, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreDist {
    /// `x_i ~ N(0, 1)`.
    StdNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    /// Probability that an unordered pair is observed.
    pub p: f64,
    /// Standard deviation of the log-space noise.
    pub noise_sigma: f64,
    pub seed: u64,
    pub score_dist: ScoreDist,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 200,
            p: 0.05,
            noise_sigma: 0.1,
            seed: 0,
            score_dist: ScoreDist::StdNormal,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidInput(format!("edge probability {} not in (0, 1]", self.p)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput("need at least two alternatives".into()));
        }
        Ok(())
    }
}

/// Erdős–Rényi comparison data: every unordered pair is kept with
/// probability `p` and a uniformly random direction `(i, j)`, with value
/// `exp(x_i - x_j + eps)`, `eps ~ N(0, sigma^2)`. Pairs are visited with
/// geometric skips, so the cost is linear in the number of kept pairs.
/// Returns the (centered) true scores and the observations.
pub fn generate(cfg: &SynthConfig) -> Result<(ScoreVector, ComparisonSet)> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw: Vec<f64> = match cfg.score_dist {
        ScoreDist::StdNormal => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    let truth = ScoreVector::centered(raw);
    let x = truth.scores();
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let total = n as u64 * (n as u64 - 1) / 2;
    let expected = (cfg.p * total as f64).ceil() as usize;
    let mut edges = Vec::with_capacity(expected + expected / 8 + 16);
    let log_q = (-cfg.p).ln_1p();
    // Row-major enumeration of pairs i < j; (i, j) tracks position `pos`.
    let (mut i, mut j, mut pos) = (0usize, 1usize, 0u64);
    loop {
        let skip = if cfg.p >= 1.0 {
            0
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            let s = (u.ln() / log_q).floor();
            if s >= (total - pos) as f64 {
                break;
            }
            s as u64
        };
        pos += skip;
        if pos >= total {
            break;
        }
        advance(n, &mut i, &mut j, skip);
        let (a, b) = if rng.random::<bool>() { (i, j) } else { (j, i) };
        let eps = noise.sample(&mut rng);
        edges.push(Comparison {
            i: a,
            j: b,
            value: (x[a] - x[b] + eps).exp(),
        });
        pos += 1;
        advance(n, &mut i, &mut j, 1);
    }
    Ok((truth, ComparisonSet::new(n, crate::pcm::ObservationMode::Cardinal, edges)?))
}

fn advance(n: usize, i: &mut usize, j: &mut usize, mut by: u64) {
    while by > 0 && *i + 1 < n {
        let left = (n - *j) as u64;
        if by < left {
            *j += by as usize;
            return;
        }
        by -= left;
        *i += 1;
        *j = *i + 1;
    }
}

/// Chain `0 -> 1 -> ... -> n-1` with the same ratio on every edge.
pub fn generate_chain(n: usize, ratio: f64) -> Result<ComparisonSet> {
    if n < 2 {
        return Err(Error::InvalidInput("a chain needs at least two alternatives".into()));
    }
    generate_chain_with(&vec![ratio; n - 1])
}

/// Chain with `ratios[i]` on edge `(i, i + 1)`.
pub fn generate_chain_with(ratios: &[f64]) -> Result<ComparisonSet> {
    ComparisonSet::cardinal(ratios.len() + 1, ratios.iter().enumerate().map(|(i, &r)| (i, i + 1, r)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: ComparisonSet,
    pub test: ComparisonSet,
    /// Held-out fraction of unordered pairs actually achieved.
    pub actual_frac: f64,
}

/// Hold out `floor(frac * pairs)` unordered pairs (both directions of a
/// pair move together), visiting pairs in a seeded random order and skipping
/// any pair whose removal would leave an endpoint without training pairs.
pub fn split(obs: &ComparisonSet, holdout_frac: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&holdout_frac) {
        return Err(Error::InvalidInput(format!("holdout fraction {holdout_frac} not in [0, 1)")));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut key_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ends = Vec::new();
    for (k, e) in obs.edges().iter().enumerate() {
        let key = (e.i.min(e.j), e.i.max(e.j));
        let g = *key_of.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            ends.push(key);
            groups.len() - 1
        });
        groups[g].push(k);
    }
    let mut degree = vec![0usize; obs.n()];
    for &(a, b) in &ends {
        degree[a] += 1;
        degree[b] += 1;
    }
    let target = (holdout_frac * groups.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = vec![false; groups.len()];
    let mut count = 0;
    for g in order {
        if count == target {
            break;
        }
        let (a, b) = ends[g];
        if degree[a] > 1 && degree[b] > 1 {
            degree[a] -= 1;
            degree[b] -= 1;
            held[g] = true;
            count += 1;
        }
    }
    if count < target {
        log::warn!("degree protection limited the holdout to {count} of {target} pairs");
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (g, members) in groups.iter().enumerate() {
        let dst = if held[g] { &mut test } else { &mut train };
        dst.extend(members.iter().map(|&k| obs.edges()[k]));
    }
    let actual_frac = if groups.is_empty() {
        0.0
    } else {
        count as f64 / groups.len() as f64
    };
    Ok(Split {
        train: ComparisonSet::new(obs.n(), obs.mode(), train)?,
        test: ComparisonSet::new(obs.n(), obs.mode(), test)?,
        actual_frac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advance_walks_pairs_in_row_major_order() {
        let n = 5;
        let (mut i, mut j) = (0, 1);
        let mut seen = vec![(i, j)];
        for _ in 0..9 {
            advance(n, &mut i, &mut j, 1);
            seen.push((i, j));
        }
        let expected: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        assert_eq!(seen, expected);
        let (mut i, mut j) = (0, 1);
        advance(n, &mut i, &mut j, 7);
        assert_eq!((i, j), expected[7]);
    }
}
