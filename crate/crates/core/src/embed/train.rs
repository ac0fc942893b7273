//! Full-batch training, loss traces and checkpoints.

use std::io::{Read, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::{evaluate, Batch, LossBreakdown};
use super::model::{ModelConfig, Params};
use super::optim::{Adam, OptimizerConfig};
use super::{data_edges, EmbeddingModel};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::pcm::{sample_triples, ComparisonSet};
use crate::scale::edge_index::EdgeIndex;

/// Loss recorded at the start of one epoch, before that epoch's update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: LossBreakdown,
    /// Wall time spent on the epoch (evaluation plus update).
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest recorded total loss.
    pub model: EmbeddingModel,
    pub trace: Vec<EpochLoss>,
    pub best_epoch: usize,
}

/// Full-batch training from a fresh initialization seeded by `cfg.seed`,
/// with fresh uniformly sampled triangle triples every epoch.
pub fn train(obs: &ComparisonSet, cfg: &ModelConfig, opt: &OptimizerConfig) -> Result<TrainOutcome> {
    let model = EmbeddingModel::init(obs.n(), *cfg)?;
    train_from(model, obs, opt)
}

/// Continue full-batch training from the given parameters.
pub fn train_from(model: EmbeddingModel, obs: &ComparisonSet, opt: &OptimizerConfig) -> Result<TrainOutcome> {
    let EmbeddingModel { config: cfg, mut params } = model;
    cfg.validate()?;
    opt.validate()?;
    obs.require(cfg.mode.observation_mode(), "train")?;
    params.check_shapes(&cfg)?;
    if params.n() != obs.n() {
        return Err(Error::InvalidInput(format!(
            "model has {} nodes but the comparison set has {}",
            params.n(),
            obs.n()
        )));
    }
    let edges = data_edges(obs);
    if edges.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = obs.n();
    let mut rng = sampling_rng(cfg.seed);
    let adj = EdgeIndex::symmetrized(obs);
    let triangle_count = if cfg.lambda_triangle > 0.0 {
        cfg.triangle_count(edges.len())
    } else {
        0
    };
    let mut adam = Adam::new(*opt, &params);
    let mut trace = Vec::with_capacity(opt.epochs);
    let mut best: Option<(f64, Params, usize)> = None;
    for epoch in 0..opt.epochs {
        let started = Instant::now();
        let triples = sample_triples(n, triangle_count, &mut rng);
        let batch = Batch {
            adj: &adj,
            edges: &edges,
            data_scale: 1.0,
            triples: &triples,
        };
        let (loss, grads) = evaluate(&cfg, &params.weights, params.h0.view(), &batch, true);
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if best.as_ref().is_none_or(|b| loss.total < b.0) {
            best = Some((loss.total, params.clone(), epoch));
        }
        adam.step(&mut params, &grads.expect("gradient requested"));
        trace.push(EpochLoss {
            epoch,
            loss,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let (params, best_epoch) = match best {
        Some((_, p, e)) => (p, e),
        None => (params, 0),
    };
    Ok(TrainOutcome {
        model: EmbeddingModel { config: cfg, params },
        trace,
        best_epoch,
    })
}

/// Generator for per-epoch sampling, on a different stream from the one
/// used for initialization.
pub(crate) fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Loss trace as CSV: `epoch,data,triangle,reg,total`.
pub fn write_trace<W: Write>(mut w: W, trace: &[EpochLoss]) -> Result<()> {
    writeln!(w, "epoch,data,triangle,reg,total")?;
    for e in trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.epoch,
            fmt_f64(e.loss.data_loss),
            fmt_f64(e.loss.triangle_loss),
            fmt_f64(e.loss.reg_loss),
            fmt_f64(e.loss.total)
        )?;
    }
    Ok(())
}

pub const CHECKPOINT_FORMAT: &str = "pcm-embedding-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: EmbeddingModel,
}

/// Versioned JSON checkpoint holding the configuration and every parameter.
pub fn save_checkpoint<W: Write>(w: W, model: &EmbeddingModel) -> Result<()> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        model: model.clone(),
    };
    serde_json::to_writer(w, &ck)?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(r: R) -> Result<EmbeddingModel> {
    let ck: Checkpoint = serde_json::from_reader(r)?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    EmbeddingModel::new(ck.model.config, ck.model.params)
}
