//! Resolved run configuration: defaults, overlaid by a JSON config file,
//! overlaid by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sparse_pcm::bench::{Method, MethodConfig};
use sparse_pcm::embed::{HeadKind, ModelConfig, Nonlinearity, OptimizerConfig};
use sparse_pcm::pcm::DEFAULT_RECIPROCITY_TOL;
use sparse_pcm::scale::ScaleConfig;

use crate::error::CliError;

/// Largest `n` for which a dense completed matrix is written.
pub const DEFAULT_DENSE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Lls,
    Btl,
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Trainer {
    Fullbatch,
    Minibatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSettings {
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    /// Method names: `lls`, `ml`, `ml-minibatch`.
    pub methods: Vec<String>,
    pub seeds: u64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSettings {
    pub n: usize,
    pub p: f64,
    pub sigma: f64,
}

/// Everything a command needs; printed by `--dump-config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub method: MethodName,
    pub trainer: Trainer,
    pub seed: u64,
    /// Relative tolerance of the reciprocity check.
    pub tol: f64,
    /// Ridge strength for BTL fits; 0 disables it.
    pub l2: f64,
    pub dense_limit: usize,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub scale: ScaleConfig,
    pub bench: BenchSettings,
    pub gen: GenSettings,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        let learned = MethodConfig::default();
        Self {
            method: MethodName::Lls,
            trainer: Trainer::Fullbatch,
            seed: 0,
            tol: DEFAULT_RECIPROCITY_TOL,
            l2: 0.0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            model: learned.model,
            optimizer: learned.optimizer,
            scale: learned.scale,
            bench: BenchSettings {
                n: vec![200, 400, 800],
                p: vec![0.01, 0.02, 0.05],
                methods: vec!["lls".into(), "ml".into()],
                seeds: 5,
                sigma: 0.1,
            },
            gen: GenSettings {
                n: 200,
                p: 0.05,
                sigma: 0.1,
            },
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

impl ResolvedConfig {
    /// Defaults overlaid by the JSON object in `path`; nested objects are
    /// merged field by field.
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let defaults = Self::default();
        let Some(path) = path else {
            return Ok(defaults);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let over: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if !over.is_object() {
            return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
        }
        let mut merged = serde_json::to_value(&defaults).expect("config serializes");
        merge(&mut merged, over);
        serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Model configuration with the run seed applied.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            seed: self.seed,
            ..self.model
        }
    }

    pub fn scale_config(&self) -> ScaleConfig {
        ScaleConfig {
            seed: self.seed,
            ..self.scale
        }
    }

    pub fn method_config(&self) -> MethodConfig {
        MethodConfig {
            model: self.model,
            optimizer: self.optimizer,
            scale: self.scale,
        }
    }

    /// Benchmark methods; `ml` means the mini-batch trainer when
    /// `trainer = minibatch`.
    pub fn bench_methods(&self) -> Result<Vec<Method>, CliError> {
        let mut out = Vec::new();
        for name in &self.bench.methods {
            let m = Method::parse(name.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown benchmark method `{name}`")))?;
            let m = if m == Method::Ml && self.trainer == Trainer::Minibatch {
                Method::MlMinibatch
            } else {
                m
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }
}

/// Model and optimizer overrides shared by the training commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ModelArgs {
    /// Embedding dimension.
    #[arg(long = "dim")]
    pub dim: Option<usize>,
    /// Message-passing layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Weight of the triangle-consistency loss.
    #[arg(long)]
    pub lambda_triangle: Option<f64>,
    /// Weight of the L2 penalty on the weights.
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    /// Edge head.
    #[arg(long, value_parser = ["linear", "mlp"])]
    pub head: Option<String>,
    /// Hidden width of the MLP head.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_enum)]
    pub nonlinearity: Option<NonlinearityArg>,
    /// Edges per mini-batch step.
    #[arg(long)]
    pub batch_edges: Option<usize>,
    /// Wedges per mini-batch step.
    #[arg(long)]
    pub batch_triples: Option<usize>,
    /// Random-walk length for subgraph induction.
    #[arg(long)]
    pub walk_hops: Option<usize>,
    /// Random walks per batch endpoint.
    #[arg(long)]
    pub walks_per_node: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NonlinearityArg {
    Relu,
    Tanh,
    Identity,
}

impl ModelArgs {
    pub fn apply(&self, cfg: &mut ResolvedConfig) {
        let m = &mut cfg.model;
        if let Some(v) = self.dim {
            m.d = v;
        }
        if let Some(v) = self.layers {
            m.layers = v;
        }
        if let Some(v) = self.lambda_triangle {
            m.lambda_triangle = v;
        }
        if let Some(v) = self.lambda_reg {
            m.lambda_reg = v;
        }
        let hidden = self.hidden.or(match m.head {
            HeadKind::MlpDifference { hidden } => Some(hidden),
            HeadKind::LinearDifference => None,
        });
        match self.head.as_deref() {
            Some("linear") => m.head = HeadKind::LinearDifference,
            Some("mlp") => {
                m.head = HeadKind::MlpDifference {
                    hidden: hidden.unwrap_or(2 * m.d),
                }
            }
            _ => {
                if let (HeadKind::MlpDifference { .. }, Some(h)) = (m.head, self.hidden) {
                    m.head = HeadKind::MlpDifference { hidden: h };
                }
            }
        }
        if let Some(v) = self.nonlinearity {
            m.nonlinearity = match v {
                NonlinearityArg::Relu => Nonlinearity::Relu,
                NonlinearityArg::Tanh => Nonlinearity::Tanh,
                NonlinearityArg::Identity => Nonlinearity::Identity,
            };
        }
        if let Some(v) = self.epochs {
            cfg.optimizer.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.optimizer.learning_rate = v;
        }
        let s = &mut cfg.scale;
        if let Some(v) = self.batch_edges {
            s.batch_edges = v;
        }
        if let Some(v) = self.batch_triples {
            s.batch_triples = v;
        }
        if self.walk_hops.is_some() {
            s.walk_hops = self.walk_hops;
        }
        if let Some(v) = self.walks_per_node {
            s.walks_per_node = v;
        }
    }
}

/// Worker cap from `PCM_THREADS`; unset means 1.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("PCM_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(CliError::Usage(format!("PCM_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}
