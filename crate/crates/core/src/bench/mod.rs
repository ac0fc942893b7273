//! Benchmark harness: synthetic data, held-out evaluation, timing and
//! reports for LLS versus the embedding model.

mod metrics;
mod report;
mod synth;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use metrics::{kendall_tau, kendall_tau_b, rmse_log_ratios, tau_from_counts, Predictor};
pub use report::{
    emit_report, median, summarize, write_fig_rmse_vs_p, write_fig_tau_vs_p, write_fig_time_vs_edges, write_report,
    write_table, CellSummary, FIG_RMSE_VS_P, FIG_TAU_VS_P, FIG_TIME_VS_EDGES, REPORT_FILE,
};
pub use synth::{generate, generate_chain, generate_chain_with, split, ScoreDist, Split, SynthConfig};

use crate::embed::{ml_scores, train, EmbeddingModel, ModelConfig, ModelMode, OptimizerConfig};
use crate::error::{Error, Result};
use crate::lls::lls_scores;
use crate::pcm::{ComparisonSet, ScoreVector};
use crate::scale::{train_minibatch, ScaleConfig};

/// Fraction of observed pairs held out for evaluation.
pub const HOLDOUT_FRAC: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Lls,
    Ml,
    MlMinibatch,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lls => "lls",
            Method::Ml => "ml",
            Method::MlMinibatch => "ml-minibatch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lls" => Some(Method::Lls),
            "ml" => Some(Method::Ml),
            "ml-minibatch" => Some(Method::MlMinibatch),
            _ => None,
        }
    }
}

/// Settings for the learned methods; LLS has no tunable settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub scale: ScaleConfig,
}

/// Message-passing layers used by the benchmark model.
pub const BENCH_LAYERS: usize = 1;
/// Training epochs used by the benchmark model.
pub const BENCH_EPOCHS: usize = 300;

impl Default for MethodConfig {
    /// One message-passing layer and 300 epochs: on the synthetic grids a
    /// second layer slows Adam's convergence without improving held-out
    /// error.
    fn default() -> Self {
        Self {
            model: ModelConfig {
                layers: BENCH_LAYERS,
                ..ModelConfig::default()
            },
            optimizer: OptimizerConfig {
                epochs: BENCH_EPOCHS,
                ..OptimizerConfig::default()
            },
            scale: ScaleConfig::default(),
        }
    }
}

impl MethodConfig {
    /// The model configuration used for a run with data seed `seed`.
    pub fn model_for(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            mode: ModelMode::Lls,
            seed,
            ..self.model
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub p: f64,
    /// Observed ordered entries before the split.
    pub edge_count: usize,
    pub method: Method,
    /// Seconds spent fitting (generation, splitting and evaluation excluded).
    pub wall_time_s: f64,
    /// Process peak resident memory after the run, when the platform
    /// reports it.
    pub peak_mem_bytes: Option<u64>,
    pub rmse: f64,
    pub kendall_tau: f64,
    pub seed: u64,
}

impl ExperimentResult {
    /// A row for a run that failed: metrics are NaN.
    pub fn failed(synth: &SynthConfig, method: Method, edge_count: usize) -> Self {
        Self {
            n: synth.n,
            p: synth.p,
            edge_count,
            method,
            wall_time_s: f64::NAN,
            peak_mem_bytes: None,
            rmse: f64::NAN,
            kendall_tau: f64::NAN,
            seed: synth.seed,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.rmse.is_nan() || self.kendall_tau.is_nan()
    }
}

/// Outcome of fitting one method on training data.
pub struct Fit {
    pub scores: ScoreVector,
    /// Present for the learned methods.
    pub model: Option<EmbeddingModel>,
    pub seconds: f64,
}

/// Fit `method` on `train`; `seed` seeds the learned methods.
pub fn fit(method: Method, train_set: &ComparisonSet, mcfg: &MethodConfig, seed: u64) -> Result<Fit> {
    let started = Instant::now();
    let (scores, model) = match method {
        Method::Lls => (lls_scores(train_set)?, None),
        Method::Ml | Method::MlMinibatch => {
            let cfg = mcfg.model_for(seed);
            let out = if method == Method::Ml {
                train(train_set, &cfg, &mcfg.optimizer)?
            } else {
                let scfg = ScaleConfig { seed, ..mcfg.scale };
                train_minibatch(train_set, &cfg, &scfg, &mcfg.optimizer)?
            };
            (ml_scores(&out.model, train_set)?, Some(out.model))
        }
    };
    Ok(Fit {
        scores,
        model,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Generate, split, fit on the training pairs, then score held-out RMSE and
/// Kendall's tau against the true scores.
pub fn run_experiment(synth: &SynthConfig, method: Method, mcfg: &MethodConfig) -> Result<ExperimentResult> {
    let (truth, obs) = generate(synth)?;
    let parts = split(&obs, HOLDOUT_FRAC, synth.seed)?;
    let fitted = fit(method, &parts.train, mcfg, synth.seed)?;
    let predictor = match &fitted.model {
        Some(model) => Predictor::Model {
            model,
            graph: &parts.train,
            scores: &fitted.scores,
        },
        None => Predictor::Scores(&fitted.scores),
    };
    let rmse = if parts.test.is_empty() {
        f64::NAN
    } else {
        rmse_log_ratios(predictor, &parts.test)?
    };
    Ok(ExperimentResult {
        n: synth.n,
        p: synth.p,
        edge_count: obs.len(),
        method,
        wall_time_s: fitted.seconds,
        peak_mem_bytes: peak_memory_bytes(),
        rmse,
        kendall_tau: kendall_tau(&fitted.scores, &truth)?,
        seed: synth.seed,
    })
}

/// Peak resident set size of this process (`VmHWM`), Linux only.
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// A benchmark grid: every `(n, p, method, seed)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub methods: Vec<Method>,
    /// Seeds `0..seeds` per cell.
    pub seeds: u64,
    pub noise_sigma: f64,
    pub method: MethodConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            ns: vec![200, 400, 800],
            ps: vec![0.01, 0.02, 0.05],
            methods: vec![Method::Lls, Method::Ml],
            seeds: 5,
            noise_sigma: 0.1,
            method: MethodConfig::default(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ps.is_empty() || self.methods.is_empty() || self.seeds == 0 {
            return Err(Error::InvalidInput("benchmark grid is empty".into()));
        }
        for &n in &self.ns {
            for &p in &self.ps {
                SynthConfig {
                    n,
                    p,
                    noise_sigma: self.noise_sigma,
                    ..SynthConfig::default()
                }
                .validate()?;
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(SynthConfig, Method)> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &p in &self.ps {
                for &method in &self.methods {
                    for seed in 0..self.seeds {
                        let synth = SynthConfig {
                            n,
                            p,
                            noise_sigma: self.noise_sigma,
                            seed,
                            score_dist: ScoreDist::StdNormal,
                        };
                        out.push((synth, method));
                    }
                }
            }
        }
        out
    }
}

/// Run every cell of the grid on up to `threads` worker threads. A failing
/// cell yields a NaN row and a warning. Rows are sorted by
/// `(n, p, method, seed)` regardless of completion order.
pub fn run_grid(grid: &GridConfig, threads: usize) -> Result<Vec<ExperimentResult>> {
    grid.validate()?;
    let cells = grid.cells();
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(cells.len()));
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        let Some((synth, method)) = cells.get(k) else {
            break;
        };
        let row = match run_experiment(synth, *method, &grid.method) {
            Ok(row) => row,
            Err(e) => {
                log::warn!(
                    "cell n={} p={} method={} seed={} failed: {e}",
                    synth.n,
                    synth.p,
                    method.name(),
                    synth.seed
                );
                let edges = generate(synth).map(|(_, obs)| obs.len()).unwrap_or(0);
                ExperimentResult::failed(synth, *method, edges)
            }
        };
        rows.lock().expect("no worker panicked").push(row);
    };
    let threads = threads.clamp(1, cells.len().max(1));
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    let mut rows = rows.into_inner().expect("no worker panicked");
    rows.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.p.total_cmp(&b.p))
            .then(a.method.cmp(&b.method))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}
