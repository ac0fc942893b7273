//! Sparse, mini-batch training for large comparison graphs.
//!
//! Each step samples a batch of observed edges, grows a node set around
//! their endpoints with short random walks, message-passes on the induced
//! subgraph only, and updates the shared weights plus the embedding rows of
//! the subgraph. Nothing proportional to `n^2` is ever allocated.

pub mod edge_index;

use std::time::Instant;

use log::warn;
use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use edge_index::{sparse_aggregate, EdgeIndex};

use crate::embed::{
    data_edges, evaluate, sampling_rng, Adam, Batch, EmbeddingModel, EpochLoss, Gradients, LossBreakdown, ModelConfig,
    OptimizerConfig, Params, TrainOutcome,
};
use crate::error::{Error, Result};
use crate::pcm::ComparisonSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleConfig {
    /// Edges per step (`B_e`).
    pub batch_edges: usize,
    /// Wedges per step (`B_t`).
    pub batch_triples: usize,
    /// Random-walk length; `None` means `ceil(log2 n)`.
    pub walk_hops: Option<usize>,
    /// Walks started from every batch endpoint.
    pub walks_per_node: usize,
    /// Node cap per subgraph; `None` means `50 * batch_edges`. Batch
    /// endpoints are always kept.
    pub max_subgraph_nodes: Option<usize>,
    pub seed: u64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            batch_edges: 8192,
            batch_triples: 8192,
            walk_hops: None,
            walks_per_node: 2,
            max_subgraph_nodes: None,
            seed: 0,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_edges == 0 {
            return Err(Error::InvalidInput("batch_edges must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hops(&self, n: usize) -> usize {
        self.walk_hops.unwrap_or_else(|| default_walk_hops(n))
    }

    pub fn node_cap(&self) -> usize {
        self.max_subgraph_nodes
            .unwrap_or_else(|| self.batch_edges.saturating_mul(50))
    }
}

/// `ceil(log2 n)`, and 0 for `n <= 1`.
pub fn default_walk_hops(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// `b` edge positions drawn uniformly without replacement, in ascending
/// order. Larger requests are clamped to `|edges|` with a warning.
pub fn sample_edge_batch<R: Rng + ?Sized>(edges: &EdgeIndex, b: usize, rng: &mut R) -> Vec<usize> {
    let m = edges.len();
    let b = if b > m {
        warn!("batch of {b} edges requested but only {m} exist; using all of them");
        m
    } else {
        b
    };
    let mut batch = sample(rng, m, b).into_vec();
    batch.sort_unstable();
    batch
}

/// Node set and induced edges of one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    /// Global node ids; position in this list is the local id.
    pub nodes: Vec<usize>,
    /// Positions in the directed edge index of every edge with both
    /// endpoints in `nodes`.
    pub edges: Vec<usize>,
}

/// Reusable global-to-local id map; entries are reset after each use so a
/// step costs time proportional to the subgraph, not to `n`.
#[derive(Debug, Clone)]
pub struct LocalIndex {
    local: Vec<usize>,
}

impl LocalIndex {
    pub fn new(n: usize) -> Self {
        Self {
            local: vec![usize::MAX; n],
        }
    }

    fn insert(&mut self, nodes: &mut Vec<usize>, v: usize) -> bool {
        if self.local[v] == usize::MAX {
            self.local[v] = nodes.len();
            nodes.push(v);
            true
        } else {
            false
        }
    }

    fn get(&self, v: usize) -> Option<usize> {
        let l = self.local[v];
        (l != usize::MAX).then_some(l)
    }

    fn clear(&mut self, nodes: &[usize]) {
        for &v in nodes {
            self.local[v] = usize::MAX;
        }
    }
}

/// Batch endpoints, expanded by random walks over the undirected graph and
/// capped by insertion order; induced edges are all observed edges with both
/// endpoints in the node set.
pub fn induce_subgraph<R: Rng + ?Sized>(
    directed: &EdgeIndex,
    undirected: &EdgeIndex,
    batch: &[usize],
    cfg: &ScaleConfig,
    rng: &mut R,
) -> Subgraph {
    let mut index = LocalIndex::new(directed.n());
    let sub = induce_with(directed, undirected, batch, cfg, rng, &mut index);
    index.clear(&sub.nodes);
    sub
}

fn induce_with<R: Rng + ?Sized>(
    directed: &EdgeIndex,
    undirected: &EdgeIndex,
    batch: &[usize],
    cfg: &ScaleConfig,
    rng: &mut R,
    index: &mut LocalIndex,
) -> Subgraph {
    let mut nodes = Vec::new();
    for &e in batch {
        let (i, j, _) = directed.edge(e);
        index.insert(&mut nodes, i);
        index.insert(&mut nodes, j);
    }
    let endpoints = nodes.len();
    let cap = cfg.node_cap().max(endpoints);
    let hops = if endpoints < cap { cfg.hops(directed.n()) } else { 0 };
    'walks: for s in 0..endpoints {
        for _ in 0..cfg.walks_per_node {
            let mut at = nodes[s];
            for _ in 0..hops {
                let nb = undirected.neighbors(at);
                if nb.is_empty() {
                    break;
                }
                at = nb[rng.random_range(0..nb.len())];
                if index.insert(&mut nodes, at) && nodes.len() >= cap {
                    break 'walks;
                }
            }
        }
    }
    let mut edges = Vec::new();
    for &u in &nodes {
        let start = directed.csr_offsets()[u];
        for (k, &v) in directed.neighbors(u).iter().enumerate() {
            if index.get(v).is_some() {
                edges.push(start + k);
            }
        }
    }
    Subgraph { nodes, edges }
}

/// Wedges `(i, j, k)`: `(i, j)` drawn uniformly from the edges, then `k`
/// uniformly from the out-neighbours of `j` other than `i`. Draws without a
/// valid `k` are retried within a budget of `10 * count` draws.
pub fn sample_wedges<R: Rng + ?Sized>(edges: &EdgeIndex, count: usize, rng: &mut R) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(count);
    if edges.is_empty() || count == 0 {
        return out;
    }
    let budget = count.saturating_mul(10);
    let mut draws = 0;
    while out.len() < count && draws < budget {
        draws += 1;
        let (i, j, _) = edges.edge(rng.random_range(0..edges.len()));
        let nb = edges.neighbors(j);
        let has_i = nb.binary_search(&i).is_ok();
        let valid = nb.len() - usize::from(has_i);
        if valid == 0 {
            continue;
        }
        let mut r = rng.random_range(0..valid);
        if has_i && nb[r] >= i {
            r += 1;
        }
        out.push((i, j, nb[r]));
    }
    if out.is_empty() {
        warn!("no wedges found; the triangle term is skipped");
    } else if out.len() < count {
        log::debug!("sampled {} of {count} wedges within the retry budget", out.len());
    }
    out
}

/// Loss and gradient of one mini-batch step, in subgraph-local terms.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub loss: LossBreakdown,
    /// Gradient of the embedding rows `subgraph.nodes`, in that order, plus
    /// the weight gradients.
    pub local: Gradients,
}

impl StepResult {
    /// Scatter the embedding gradient into an `n x d` array.
    pub fn global_h0_gradient(&self, nodes: &[usize], n: usize) -> Array2<f64> {
        let mut g = Array2::zeros((n, self.local.h0.ncols()));
        for (l, &v) in nodes.iter().enumerate() {
            g.row_mut(v).assign(&self.local.h0.row(l));
        }
        g
    }
}

/// Precomputed indices shared by all steps on one comparison set.
#[derive(Debug, Clone)]
pub struct MinibatchContext {
    /// Observed entries; values are the training targets.
    directed: EdgeIndex,
    undirected: EdgeIndex,
    index: LocalIndex,
}

impl MinibatchContext {
    pub fn new(obs: &ComparisonSet) -> Self {
        let directed = EdgeIndex::new(obs.n(), data_edges(obs)).expect("observed entries are unique");
        Self {
            undirected: EdgeIndex::symmetrized(obs),
            index: LocalIndex::new(obs.n()),
            directed,
        }
    }

    /// Observed entries with their training targets.
    pub fn edges(&self) -> &EdgeIndex {
        &self.directed
    }

    pub fn undirected(&self) -> &EdgeIndex {
        &self.undirected
    }

    pub fn induce<R: Rng + ?Sized>(&mut self, batch: &[usize], cfg: &ScaleConfig, rng: &mut R) -> Subgraph {
        let sub = induce_with(&self.directed, &self.undirected, batch, cfg, rng, &mut self.index);
        self.index.clear(&sub.nodes);
        sub
    }

    /// Wedges among the induced edges, in global ids.
    pub fn wedges<R: Rng + ?Sized>(&mut self, sub: &Subgraph, count: usize, rng: &mut R) -> Vec<(usize, usize, usize)> {
        let local = self.local_directed(sub);
        sample_wedges(&local, count, rng)
            .into_iter()
            .map(|(i, j, k)| (sub.nodes[i], sub.nodes[j], sub.nodes[k]))
            .collect()
    }

    fn local_directed(&mut self, sub: &Subgraph) -> EdgeIndex {
        self.map_nodes(sub);
        let edges = sub
            .edges
            .iter()
            .map(|&e| {
                let (i, j, v) = self.directed.edge(e);
                (self.local(i), self.local(j), v)
            })
            .collect();
        self.index.clear(&sub.nodes);
        EdgeIndex::new(sub.nodes.len(), edges).expect("induced edges are unique")
    }

    fn map_nodes(&mut self, sub: &Subgraph) {
        let mut scratch = Vec::with_capacity(sub.nodes.len());
        for &v in &sub.nodes {
            self.index.insert(&mut scratch, v);
        }
    }

    fn local(&self, v: usize) -> usize {
        self.index.get(v).expect("node in subgraph")
    }

    /// Loss (and gradient) of one step: data loss on the batch edges scaled
    /// by `|edges| / |batch|`, triangle loss on the given wedges (global
    /// ids, all inside the subgraph), message passing on the subgraph only.
    pub fn step(
        &mut self,
        model: &EmbeddingModel,
        batch: &[usize],
        sub: &Subgraph,
        wedges: &[(usize, usize, usize)],
        with_grad: bool,
    ) -> (LossBreakdown, Option<StepResult>) {
        self.step_parts(&model.config, &model.params, batch, sub, wedges, with_grad)
    }

    fn step_parts(
        &mut self,
        cfg: &ModelConfig,
        params: &Params,
        batch: &[usize],
        sub: &Subgraph,
        wedges: &[(usize, usize, usize)],
        with_grad: bool,
    ) -> (LossBreakdown, Option<StepResult>) {
        self.map_nodes(sub);
        let mut pairs = Vec::new();
        for &e in &sub.edges {
            let (i, j, _) = self.directed.edge(e);
            pairs.push((self.local(i), self.local(j)));
        }
        let adj = EdgeIndex::from_pairs(sub.nodes.len(), &pairs);
        let local_batch: Vec<(usize, usize, f64)> = batch
            .iter()
            .map(|&e| {
                let (i, j, y) = self.directed.edge(e);
                (self.local(i), self.local(j), y)
            })
            .collect();
        let local_wedges: Vec<(usize, usize, usize)> = wedges
            .iter()
            .map(|&(i, j, k)| (self.local(i), self.local(j), self.local(k)))
            .collect();
        self.index.clear(&sub.nodes);

        let h0 = params.h0.select(Axis(0), &sub.nodes);
        let scale = if batch.is_empty() {
            0.0
        } else {
            self.directed.len() as f64 / batch.len() as f64
        };
        let problem = Batch {
            adj: &adj,
            edges: &local_batch,
            data_scale: scale,
            triples: &local_wedges,
        };
        let (loss, grads) = evaluate(cfg, &params.weights, h0.view(), &problem, with_grad);
        (loss, grads.map(|local| StepResult { loss, local }))
    }
}

/// Mini-batch training. An epoch is `ceil(|edges| / B_e)` steps; the trace
/// records the mean step loss of each epoch and the returned parameters are
/// those at the end of the epoch with the lowest mean loss.
pub fn train_minibatch(
    obs: &ComparisonSet,
    cfg: &ModelConfig,
    scfg: &ScaleConfig,
    opt: &OptimizerConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    scfg.validate()?;
    opt.validate()?;
    obs.require(cfg.mode.observation_mode(), "train_minibatch")?;
    let mut ctx = MinibatchContext::new(obs);
    let m = ctx.edges().len();
    if m == 0 {
        return Err(Error::EmptyObservations);
    }
    let model = EmbeddingModel::init(obs.n(), *cfg)?;
    let mut params = model.params;
    let mut rng = sampling_rng(scfg.seed);
    let b = scfg.batch_edges.min(m);
    let steps = m.div_ceil(b);
    let triples = if cfg.lambda_triangle > 0.0 { scfg.batch_triples } else { 0 };
    let mut adam = Adam::new(*opt, &params);
    let mut trace = Vec::with_capacity(opt.epochs);
    let mut best: Option<(f64, Params, usize)> = None;
    for epoch in 0..opt.epochs {
        let started = Instant::now();
        let mut sum = LossBreakdown {
            data_loss: 0.0,
            triangle_loss: 0.0,
            reg_loss: 0.0,
            total: 0.0,
        };
        for _ in 0..steps {
            let batch = sample_edge_batch(ctx.edges(), b, &mut rng);
            let sub = ctx.induce(&batch, scfg, &mut rng);
            let wedges = ctx.wedges(&sub, triples, &mut rng);
            let (loss, step) = ctx.step_parts(cfg, &params, &batch, &sub, &wedges, true);
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let step = step.expect("gradient requested");
            adam.step_rows(&mut params, &step.local.weights, &sub.nodes, &step.local.h0);
            sum.data_loss += loss.data_loss;
            sum.triangle_loss += loss.triangle_loss;
            sum.reg_loss += loss.reg_loss;
            sum.total += loss.total;
        }
        let k = steps as f64;
        let mean = LossBreakdown {
            data_loss: sum.data_loss / k,
            triangle_loss: sum.triangle_loss / k,
            reg_loss: sum.reg_loss / k,
            total: sum.total / k,
        };
        if best.as_ref().is_none_or(|bst| mean.total < bst.0) {
            best = Some((mean.total, params.clone(), epoch));
        }
        trace.push(EpochLoss {
            epoch,
            loss: mean,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let (params, best_epoch) = match best {
        Some((_, p, e)) => (p, e),
        None => (params, 0),
    };
    Ok(TrainOutcome {
        model: EmbeddingModel { config: *cfg, params },
        trace,
        best_epoch,
    })
}
