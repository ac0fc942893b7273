//! Bradley-Terry-Luce maximum likelihood from win counts.
//!
//! `Pr(i beats j) = sigma(x_i - x_j)`. The log-likelihood is concave and
//! invariant under a common shift of `x`; scores are returned zero-mean per
//! connected component of the comparison graph.

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{center_per_group, component_labels};
use crate::pcm::{ComparisonSet, ObservationMode, ScoreVector};

/// Probabilities handed to odds conversions are clamped to `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-12;

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step size.
    Fixed(f64),
    /// Armijo backtracking starting from step 1.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtlFitConfig {
    pub max_iter: usize,
    /// Stop once the gradient infinity-norm drops below this.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Ridge penalty `l2_strength * |x|^2` subtracted from the likelihood.
    pub l2_strength: f64,
}

impl Default for BtlFitConfig {
    fn default() -> Self {
        Self {
            max_iter: 5_000,
            grad_tol: 1e-8,
            step_rule: StepRule::Backtracking,
            l2_strength: 0.0,
        }
    }
}

/// Ridge strength used when callers opt into regularization without a value.
pub const DEFAULT_RIDGE: f64 = 1e-6;

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log sigma(u)` without overflow.
pub fn log_sigmoid(u: f64) -> f64 {
    -((-u).max(0.0) + (-u.abs()).exp().ln_1p())
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

fn check(x: &[f64], obs: &ComparisonSet, op: &'static str) -> Result<()> {
    obs.require(ObservationMode::BinaryCounts, op)?;
    if x.len() != obs.n() {
        return Err(Error::InvalidInput(format!(
            "score vector has length {}, expected {}",
            x.len(),
            obs.n()
        )));
    }
    Ok(())
}

/// `sum over entries (i, j, c_ij) of c_ij log sigma(x_i - x_j)`.
pub fn log_likelihood(x: &[f64], obs: &ComparisonSet) -> Result<f64> {
    check(x, obs, "log_likelihood")?;
    Ok(raw_log_likelihood(x, obs))
}

fn raw_log_likelihood(x: &[f64], obs: &ComparisonSet) -> f64 {
    obs.edges()
        .iter()
        .filter(|e| e.value > 0.0)
        .map(|e| e.value * log_sigmoid(x[e.i] - x[e.j]))
        .sum()
}

pub fn gradient(x: &[f64], obs: &ComparisonSet) -> Result<Vec<f64>> {
    check(x, obs, "gradient")?;
    Ok(raw_gradient(x, obs))
}

fn raw_gradient(x: &[f64], obs: &ComparisonSet) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for e in obs.edges().iter().filter(|e| e.value > 0.0) {
        let push = e.value * sigmoid(x[e.j] - x[e.i]);
        g[e.i] += push;
        g[e.j] -= push;
    }
    g
}

/// Check that the MLE exists: within every component of the comparison
/// graph the "beats" digraph must be strongly connected. Returns the smallest
/// item of a group that nobody else in its component ever beats.
pub fn find_unbeaten_item(obs: &ComparisonSet) -> Option<usize> {
    let n = obs.n();
    let mut g = DiGraph::<(), ()>::with_capacity(n, obs.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for e in obs.edges().iter().filter(|e| e.value > 0.0) {
        g.add_edge(nodes[e.i], nodes[e.j], ());
    }
    let sccs = kosaraju_scc(&g);
    let mut scc_of = vec![0usize; n];
    for (k, scc) in sccs.iter().enumerate() {
        for v in scc {
            scc_of[v.index()] = k;
        }
    }
    let (labels, count) = component_labels(n, obs.undirected_pairs());
    let mut sccs_per_component = vec![0usize; count];
    for scc in &sccs {
        sccs_per_component[labels[scc[0].index()]] += 1;
    }
    // An SCC with no incoming edge from another SCC is never beaten by outsiders.
    let mut beaten = vec![false; sccs.len()];
    for e in obs.edges().iter().filter(|e| e.value > 0.0) {
        if scc_of[e.i] != scc_of[e.j] {
            beaten[scc_of[e.j]] = true;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(k, scc)| sccs_per_component[labels[scc[0].index()]] > 1 && !beaten[*k])
        .map(|(_, scc)| scc.iter().map(|v| v.index()).min().unwrap_or(0))
        .min()
}

fn objective(x: &[f64], obs: &ComparisonSet, l2: f64) -> f64 {
    raw_log_likelihood(x, obs) - l2 * x.iter().map(|v| v * v).sum::<f64>()
}

fn objective_gradient(x: &[f64], obs: &ComparisonSet, l2: f64) -> Vec<f64> {
    let mut g = raw_gradient(x, obs);
    if l2 > 0.0 {
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi -= 2.0 * l2 * xi;
        }
    }
    g
}

/// `objective(next) - objective(x)` computed term by term so that tiny
/// improvements are not lost to cancellation between two large sums.
fn objective_change(x: &[f64], next: &[f64], obs: &ComparisonSet, l2: f64) -> f64 {
    let mut delta = 0.0;
    for e in obs.edges().iter().filter(|e| e.value > 0.0) {
        let (a, b) = (next[e.i] - next[e.j], x[e.i] - x[e.j]);
        // log sigma(a) - log sigma(b) = -ln(1 + sigma(-b) * expm1(b - a))
        delta -= e.value * (sigmoid(-b) * (b - a).exp_m1()).ln_1p();
    }
    if l2 > 0.0 {
        let ridge: f64 = x.iter().zip(next).map(|(u, v)| (v - u) * (v + u)).sum();
        delta -= l2 * ridge;
    }
    delta
}

/// Twice the diagonal of the negative Hessian. The Laplacian-structured
/// Hessian is bounded by this, so the scaled step `g / D` never overshoots a
/// locally quadratic objective.
fn curvature_scale(x: &[f64], obs: &ComparisonSet, l2: f64) -> Vec<f64> {
    let mut d = vec![2.0 * l2; x.len()];
    for e in obs.edges().iter().filter(|e| e.value > 0.0) {
        let s = sigmoid(x[e.i] - x[e.j]);
        let c = 2.0 * e.value * s * (1.0 - s);
        d[e.i] += c;
        d[e.j] += c;
    }
    d
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood scores by gradient ascent with Armijo backtracking.
///
/// The backtracking rule ascends along the gradient scaled per coordinate by
/// the local curvature, which keeps unit steps well sized when win counts are
/// large or probabilities are extreme.
pub fn fit(obs: &ComparisonSet, cfg: &BtlFitConfig) -> Result<ScoreVector> {
    obs.require(ObservationMode::BinaryCounts, "fit")?;
    if !(cfg.grad_tol > 0.0) || cfg.max_iter == 0 || !(cfg.l2_strength >= 0.0) {
        return Err(Error::InvalidInput(format!("invalid BTL configuration {cfg:?}")));
    }
    if cfg.l2_strength == 0.0 {
        if let Some(item) = find_unbeaten_item(obs) {
            return Err(Error::MleDoesNotExist { item });
        }
    }
    let n = obs.n();
    let (labels, count) = component_labels(n, obs.undirected_pairs());
    let l2 = cfg.l2_strength;
    let mut x = vec![0.0; n];
    let mut grad_norm = f64::INFINITY;
    for iteration in 0..cfg.max_iter {
        let g = objective_gradient(&x, obs, l2);
        grad_norm = inf_norm(&g);
        if grad_norm <= cfg.grad_tol {
            return Ok(ScoreVector::centered_per_component(x, labels));
        }
        let next = match cfg.step_rule {
            StepRule::Fixed(step) => {
                let next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                if next.iter().any(|v| !v.is_finite()) || !objective(&next, obs, l2).is_finite() {
                    return Err(Error::Diverged { iteration });
                }
                next
            }
            StepRule::Backtracking => {
                let scale = curvature_scale(&x, obs, l2);
                let dir: Vec<f64> = g
                    .iter()
                    .zip(&scale)
                    .map(|(gi, di)| if *di > 0.0 { gi / di } else { 0.0 })
                    .collect();
                let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let mut step = 1.0;
                loop {
                    let next: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                    let gain = objective_change(&x, &next, obs, l2);
                    if gain.is_finite() && gain >= ARMIJO_C * step * slope {
                        break next;
                    }
                    // Near the optimum the gain drops below the rounding
                    // noise of `x` itself. By concavity a nonnegative slope
                    // at `next` still certifies ascent along the segment.
                    let end_slope: f64 = objective_gradient(&next, obs, l2)
                        .iter()
                        .zip(&dir)
                        .map(|(a, b)| a * b)
                        .sum();
                    if gain.is_finite() && end_slope >= 0.0 {
                        break next;
                    }
                    step *= SHRINK;
                    if step < MIN_STEP {
                        // No ascent left at machine precision.
                        return Err(Error::BtlNotConverged {
                            iterations: iteration,
                            grad_norm,
                        });
                    }
                }
            }
        };
        x = next;
        // Gradient components sum to zero per component; this only removes drift.
        center_per_group(&mut x, &labels, count);
    }
    Err(Error::BtlNotConverged {
        iterations: cfg.max_iter,
        grad_norm,
    })
}
