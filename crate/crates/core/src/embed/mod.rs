//! Message-passing embedding model for PCM completion.
//!
//! Each node owns a learnable embedding `h_i`. `L` rounds of
//! `h_i <- phi(W1 h_i + sum_{j in N(i)} W2 h_j)` over the undirected
//! comparison graph produce final embeddings, and an antisymmetric edge head
//! turns a pair of embeddings into a predicted log-ratio `t_ij = -t_ji`.
//! Training minimizes `data + lambda_triangle * triangle + lambda_reg * reg`
//! with hand-written reverse-mode gradients and Adam.

mod forward;
mod model;
mod optim;
mod train;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forward::LossBreakdown;
pub use model::{
    Gradients, HeadKind, HeadParams, ModelConfig, ModelMode, Nonlinearity, Params, Weights, H0_STD,
    MAX_TRIANGLE_SAMPLES, WEIGHT_NOISE_STD,
};
pub use optim::OptimizerConfig;
pub use train::{load_checkpoint, save_checkpoint, train, train_from, write_trace, EpochLoss, TrainOutcome, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

pub(crate) use forward::{evaluate, forward, Batch, NodeProjection};
pub(crate) use optim::Adam;
pub(crate) use train::sampling_rng;

use crate::btl::{clamp_probability, sigmoid};
use crate::error::{Error, Result};
use crate::lls::{assemble_log_targets, default_max_iter, solve, GaugeMode, DEFAULT_CG_TOL};
use crate::pcm::{reciprocal_projection, ComparisonSet, DensePcm, ObservationMode, ScoreVector, MAX_LOG_RATIO};
use crate::scale::edge_index::EdgeIndex;

/// A configuration together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub config: ModelConfig,
    pub params: Params,
}

impl EmbeddingModel {
    /// Wrap explicit parameters after checking shapes and finiteness.
    pub fn new(config: ModelConfig, params: Params) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        if !params.is_finite() {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        Ok(Self { config, params })
    }

    /// Random initialization for `n` nodes, seeded by `config.seed`.
    pub fn init(n: usize, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = Params::init(n, &config, &mut rng);
        Ok(Self { config, params })
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    fn check_graph(&self, obs: &ComparisonSet) -> Result<()> {
        if obs.n() != self.n() {
            return Err(Error::InvalidInput(format!(
                "model has {} nodes but the comparison set has {}",
                self.n(),
                obs.n()
            )));
        }
        Ok(())
    }

    fn check_data(&self, obs: &ComparisonSet, operation: &'static str) -> Result<()> {
        self.check_graph(obs)?;
        obs.require(self.config.mode.observation_mode(), operation)
    }
}

/// Training targets: `(i, j, ln a_ij)` for cardinal data, `(i, j, c_ij)`
/// for the positive win counts.
pub(crate) fn data_edges(obs: &ComparisonSet) -> Vec<(usize, usize, f64)> {
    match obs.mode() {
        ObservationMode::Cardinal => obs.edges().iter().map(|e| (e.i, e.j, e.value.ln())).collect(),
        ObservationMode::BinaryCounts => obs
            .edges()
            .iter()
            .filter(|e| e.value > 0.0)
            .map(|e| (e.i, e.j, e.value))
            .collect(),
    }
}

/// Final embeddings after all message-passing layers over the undirected
/// neighbourhoods of `obs`.
pub fn message_pass(model: &EmbeddingModel, obs: &ComparisonSet) -> Result<Array2<f64>> {
    model.check_graph(obs)?;
    let adj = EdgeIndex::symmetrized(obs);
    let fp = forward(&model.config, &model.params.weights, model.params.h0.view(), &adj);
    Ok(fp.hs.into_iter().last().expect("at least the input"))
}

/// Predicted log-ratio of `(i, j)` from final embeddings `h`.
pub fn predict_log_ratio(h: ArrayView2<f64>, i: usize, j: usize, head: &HeadParams) -> f64 {
    match head {
        HeadParams::Linear { v } => h.row(i).dot(v) - h.row(j).dot(v),
        HeadParams::Mlp { a, b, c } => {
            let (pi, pj) = (a.dot(&h.row(i)), a.dot(&h.row(j)));
            let mut acc = 0.0;
            for k in 0..b.len() {
                let q = pi[k] - pj[k];
                acc += c[k] * ((b[k] + q).tanh() - (b[k] - q).tanh());
            }
            0.5 * acc
        }
    }
}

/// Predicted log-ratios for arbitrary pairs, message passing over `obs`.
pub fn predict_pairs(model: &EmbeddingModel, obs: &ComparisonSet, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let h = message_pass(model, obs)?;
    let n = model.n();
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::InvalidInput(format!("pair ({i}, {j}) outside 0..{n}")));
    }
    let proj = NodeProjection::new(&model.params.weights.head, h.view());
    Ok(pairs.iter().map(|&(i, j)| proj.pair(i, j)).collect())
}

fn check_triples(n: usize, triples: &[(usize, usize, usize)]) -> Result<()> {
    match triples
        .iter()
        .find(|&&(i, j, k)| i >= n || j >= n || k >= n || i == j || j == k || i == k)
    {
        Some(t) => Err(Error::InvalidInput(format!("invalid triple {t:?} for {n} nodes"))),
        None => Ok(()),
    }
}

fn full_batch_eval(
    model: &EmbeddingModel,
    obs: &ComparisonSet,
    triples: &[(usize, usize, usize)],
    operation: &'static str,
    with_grad: bool,
) -> Result<(LossBreakdown, Option<Gradients>)> {
    model.check_data(obs, operation)?;
    check_triples(model.n(), triples)?;
    let edges = data_edges(obs);
    if edges.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let adj = EdgeIndex::symmetrized(obs);
    let batch = Batch {
        adj: &adj,
        edges: &edges,
        data_scale: 1.0,
        triples,
    };
    Ok(evaluate(
        &model.config,
        &model.params.weights,
        model.params.h0.view(),
        &batch,
        with_grad,
    ))
}

/// Loss terms on all observed entries and the given triples.
pub fn loss(model: &EmbeddingModel, obs: &ComparisonSet, triples: &[(usize, usize, usize)]) -> Result<LossBreakdown> {
    Ok(full_batch_eval(model, obs, triples, "loss", false)?.0)
}

/// Loss and its exact gradient with respect to every parameter.
pub fn gradients(
    model: &EmbeddingModel,
    obs: &ComparisonSet,
    triples: &[(usize, usize, usize)],
) -> Result<(LossBreakdown, Gradients)> {
    let (l, g) = full_batch_eval(model, obs, triples, "gradients", true)?;
    Ok((l, g.expect("gradient requested")))
}

/// All-pairs predictions before reciprocal projection: `exp(t_ij)` in LLS
/// mode, clamped odds `p / (1 - p)` with `p = sigma(t_ij)` in BTL mode.
pub fn ml_raw_completion(model: &EmbeddingModel, obs: &ComparisonSet) -> Result<Array2<f64>> {
    let h = message_pass(model, obs)?;
    let proj = NodeProjection::new(&model.params.weights.head, h.view());
    let n = model.n();
    let mut out = Array2::ones((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = proj.pair(i, j);
            out[(i, j)] = match model.config.mode {
                ModelMode::Lls => {
                    if !(t.abs() <= MAX_LOG_RATIO) {
                        return Err(Error::Overflow { i, j, log_ratio: t });
                    }
                    t.exp()
                }
                ModelMode::Btl => {
                    let p = clamp_probability(sigmoid(t));
                    p / (1.0 - p)
                }
            };
        }
    }
    Ok(out)
}

/// Dense completed PCM: all-pairs prediction followed by the
/// geometric-mean reciprocal projection.
pub fn ml_complete(model: &EmbeddingModel, obs: &ComparisonSet) -> Result<DensePcm> {
    reciprocal_projection(&DensePcm::new(ml_raw_completion(model, obs)?)?)
}

/// Per-node scores for ranking: log-least-squares fitted to the model's
/// predicted log-ratios on the observed pairs.
pub fn ml_scores(model: &EmbeddingModel, obs: &ComparisonSet) -> Result<ScoreVector> {
    let pairs = obs.undirected_pairs();
    let t = predict_pairs(model, obs, &pairs)?;
    let constraints = pairs.iter().zip(t).map(|(&(i, j), y)| (i, j, y)).collect();
    let sys = assemble_log_targets(model.n(), constraints);
    solve(&sys, GaugeMode::PerComponent, DEFAULT_CG_TOL, default_max_iter(model.n()))
}

