//! The subcommands.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_pcm::bench::{emit_report, generate, run_grid, write_table, GridConfig, SynthConfig};
use sparse_pcm::btl::{self, BtlFitConfig};
use sparse_pcm::embed::{self, ModelConfig, ModelMode, TrainOutcome};
use sparse_pcm::graph::component_labels;
use sparse_pcm::io::{
    detect_kind_path, fmt_f64, read_counts, read_dense_raw, read_sparse, read_sparse_rows, write_dense, write_pairs,
    write_ranking, write_scores, write_sparse, FileKind,
};
use sparse_pcm::lls::{lls_complete, lls_scores};
use sparse_pcm::pcm::{consistency_report, principal_eigen, sample_triples, triangle_residuals, validate_entries};
use sparse_pcm::scale::train_minibatch;
use sparse_pcm::{ComparisonSet, DensePcm, Error, ScoreVector};

use crate::config::{threads_from_env, MethodName, ResolvedConfig, Trainer};
use crate::error::{CliError, EXIT_INVALID, EXIT_OK};

/// Triples sampled for the residual printed after completion.
const RESIDUAL_SAMPLES: usize = 1_000;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn kind_of(path: &Path) -> Result<FileKind, CliError> {
    open(path)?;
    Ok(detect_kind_path(path)?)
}

/// Cardinal or count observations from a sparse file.
fn read_observations(path: &Path) -> Result<ComparisonSet, CliError> {
    match kind_of(path)? {
        FileKind::SparseRatios => Ok(read_sparse(open(path)?, None)?),
        FileKind::WinCounts => Ok(read_counts(open(path)?, None)?),
        FileKind::Dense => Err(CliError::Usage(format!(
            "{} is a dense matrix; expected a sparse `i,j,value` or `i,j,wins_i,wins_j` file",
            path.display()
        ))),
    }
}

fn warn_if_disconnected(obs: &ComparisonSet) {
    let (_, count) = component_labels(obs.n(), obs.edges().iter().map(|e| (e.i, e.j)));
    if count > 1 {
        warn!("comparison graph has {count} connected components; scores are centered per component and cross-component ratios carry no information");
    }
}

pub fn validate(path: &Path, cfg: &ResolvedConfig) -> Result<u8, CliError> {
    match kind_of(path)? {
        FileKind::Dense => validate_dense(path, cfg.tol),
        FileKind::SparseRatios => validate_sparse(path, cfg.tol),
        FileKind::WinCounts => {
            let obs = read_counts(open(path)?, None)?;
            let (_, components) = component_labels(obs.n(), obs.edges().iter().map(|e| (e.i, e.j)));
            println!("win counts: n = {}, ordered entries = {}, components = {components}", obs.n(), obs.len());
            println!("valid");
            Ok(EXIT_OK)
        }
    }
}

fn validate_dense(path: &Path, tol: f64) -> Result<u8, CliError> {
    let a = read_dense_raw(open(path)?)?;
    let report = validate_entries(a.view(), tol);
    println!("dense PCM: n = {}", a.nrows());
    if !report.is_valid() {
        for v in &report.violations {
            println!("violation: {v}");
        }
        println!("invalid ({} violations)", report.violations.len());
        return Ok(EXIT_INVALID);
    }
    let pcm = DensePcm::new(a)?;
    let c = consistency_report(&pcm)?;
    let eig = principal_eigen(&pcm, 10_000, 1e-10)?;
    println!("lambda_max = {:.6}", c.lambda_max);
    println!(
        "weights = {}",
        eig.weights.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>().join(", ")
    );
    println!("CI = {:.6}", c.ci);
    match (c.cr, c.ri_used) {
        (Some(cr), Some(ri)) => println!("CR = {cr:.6} (RI = {ri})"),
        _ => println!("CR = n/a (no random index for n = {})", c.n),
    }
    println!("max triangle residual = {}", fmt_f64(c.max_triangle_residual));
    println!("valid");
    Ok(EXIT_OK)
}

fn validate_sparse(path: &Path, tol: f64) -> Result<u8, CliError> {
    let rows = read_sparse_rows(open(path)?)?;
    let mut problems = Vec::new();
    let mut seen = std::collections::HashMap::new();
    let mut n = 0;
    for &(line, i, j, v) in &rows {
        n = n.max(i + 1).max(j + 1);
        if i == j {
            problems.push(format!("line {line}: self comparison at node {i}"));
        }
        if !(v > 0.0 && v.is_finite()) {
            problems.push(format!("line {line}: entry ({i}, {j}) = {v} is not positive"));
        }
        if seen.insert((i, j), v).is_some() {
            problems.push(format!("line {line}: duplicate ordered pair ({i}, {j})"));
        }
    }
    let mut checked = HashSet::new();
    for (&(i, j), &v) in &seen {
        if let Some(&w) = seen.get(&(j, i)) {
            let key = (i.min(j), i.max(j));
            if checked.insert(key) && !((v * w - 1.0).abs() <= tol) {
                problems.push(format!(
                    "reciprocity violated at ({}, {}): a_ij * a_ji = {}",
                    key.0,
                    key.1,
                    v * w
                ));
            }
        }
    }
    problems.sort();
    let pairs: HashSet<(usize, usize)> = seen.keys().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    let (_, components) = component_labels(n, pairs.iter().copied());
    println!(
        "sparse PCM: n = {n}, ordered entries = {}, pairs = {}, components = {components}",
        rows.len(),
        pairs.len()
    );
    if problems.is_empty() {
        println!("valid");
        Ok(EXIT_OK)
    } else {
        for p in &problems {
            println!("violation: {p}");
        }
        println!("invalid ({} violations)", problems.len());
        Ok(EXIT_INVALID)
    }
}

fn learned_config(cfg: &ResolvedConfig, obs: &ComparisonSet) -> ModelConfig {
    ModelConfig {
        mode: ModelMode::for_observations(obs.mode()),
        ..cfg.model_config()
    }
}

fn train_model(cfg: &ResolvedConfig, obs: &ComparisonSet) -> Result<TrainOutcome, CliError> {
    let model_cfg = learned_config(cfg, obs);
    Ok(match cfg.trainer {
        Trainer::Fullbatch => embed::train(obs, &model_cfg, &cfg.optimizer)?,
        Trainer::Minibatch => train_minibatch(obs, &model_cfg, &cfg.scale_config(), &cfg.optimizer)?,
    })
}

pub struct CompleteOutputs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub scores: Option<&'a Path>,
    pub sparse: bool,
    pub checkpoint: Option<&'a Path>,
    pub trace: Option<&'a Path>,
}

fn default_scores_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "completion".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.scores.csv"))
}

pub fn complete(cfg: &ResolvedConfig, out: &CompleteOutputs<'_>) -> Result<u8, CliError> {
    let obs = read_observations(out.input)?;
    let n = obs.n();
    if !out.sparse && n > cfg.dense_limit {
        return Err(Error::DenseLimit {
            n,
            limit: cfg.dense_limit,
        }
        .into());
    }
    warn_if_disconnected(&obs);
    let pairs: Vec<(usize, usize)> = obs.edges().iter().map(|e| (e.i, e.j)).collect();
    let (scores, dense, sparse_values) = match cfg.method {
        MethodName::Lls => {
            if out.sparse {
                let x = lls_scores(&obs)?;
                let t = pairs.iter().map(|&(i, j)| x.log_ratio(i, j)).collect();
                (x, None, Some(t))
            } else {
                let (x, pcm) = lls_complete(&obs)?;
                (x, Some(pcm), None)
            }
        }
        MethodName::Ml => {
            let outcome = train_model(cfg, &obs)?;
            if let Some(path) = out.trace {
                let mut w = create(path)?;
                embed::write_trace(&mut w, &outcome.trace)?;
                finish(w)?;
            }
            let model = outcome.model;
            if let Some(path) = out.checkpoint {
                let mut w = create(path)?;
                embed::save_checkpoint(&mut w, &model)?;
                finish(w)?;
            }
            let x = embed::ml_scores(&model, &obs)?;
            if out.sparse {
                let t = embed::predict_pairs(&model, &obs, &pairs)?;
                (x, None, Some(t))
            } else {
                (x, Some(embed::ml_complete(&model, &obs)?), None)
            }
        }
        MethodName::Btl => {
            return Err(CliError::Usage(
                "complete supports --method lls or ml; use `rank --method btl` for win counts".into(),
            ))
        }
    };

    let mut w = create(out.output)?;
    match (&dense, &sparse_values) {
        (Some(pcm), _) => write_dense(&mut w, pcm)?,
        (None, Some(t)) => {
            let rows: Vec<(usize, usize, f64)> = pairs.iter().zip(t).map(|(&(i, j), y)| (i, j, y.exp())).collect();
            write_pairs(&mut w, &rows)?;
        }
        (None, None) => unreachable!("one output form is always produced"),
    }
    finish(w)?;
    let scores_path = out.scores.map_or_else(|| default_scores_path(out.output), Path::to_path_buf);
    let mut w = create(&scores_path)?;
    write_scores(&mut w, &scores)?;
    finish(w)?;

    println!(
        "completed n = {n} with {} ({} observed entries)",
        match cfg.method {
            MethodName::Lls => "lls",
            _ => "ml",
        },
        obs.len()
    );
    println!("wrote {} and {}", out.output.display(), scores_path.display());
    if let Some(pcm) = &dense {
        if n >= 3 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let triples = sample_triples(n, RESIDUAL_SAMPLES, &mut rng);
            let max = triangle_residuals(pcm, &triples).into_iter().fold(0.0, f64::max);
            println!(
                "max triangle residual over {} sampled triples = {}",
                triples.len(),
                fmt_f64(max)
            );
        }
    }
    Ok(EXIT_OK)
}

pub fn rank(path: &Path, output: Option<&Path>, cfg: &ResolvedConfig) -> Result<u8, CliError> {
    let obs = read_observations(path)?;
    let counts = obs.mode() == sparse_pcm::ObservationMode::BinaryCounts;
    let scores: ScoreVector = match cfg.method {
        MethodName::Btl => {
            if !counts {
                return Err(CliError::Usage("--method btl needs a win-count file `i,j,wins_i,wins_j`".into()));
            }
            let fit_cfg = BtlFitConfig {
                l2_strength: cfg.l2,
                ..BtlFitConfig::default()
            };
            btl::fit(&obs, &fit_cfg)?
        }
        MethodName::Lls => {
            if counts {
                return Err(CliError::Usage(
                    "--method lls needs a ratio file `i,j,value`; use --method btl for win counts".into(),
                ));
            }
            lls_scores(&obs)?
        }
        MethodName::Ml => {
            let outcome = train_model(cfg, &obs)?;
            embed::ml_scores(&outcome.model, &obs)?
        }
    };
    warn_if_disconnected(&obs);
    match output {
        Some(p) => {
            let mut w = create(p)?;
            write_ranking(&mut w, &scores)?;
            finish(w)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_ranking(&mut lock, &scores)?;
            lock.flush()?;
        }
    }
    Ok(EXIT_OK)
}

pub fn bench(dir: &Path, cfg: &ResolvedConfig) -> Result<u8, CliError> {
    let grid = GridConfig {
        ns: cfg.bench.n.clone(),
        ps: cfg.bench.p.clone(),
        methods: cfg.bench_methods()?,
        seeds: cfg.bench.seeds,
        noise_sigma: cfg.bench.sigma,
        method: cfg.method_config(),
    };
    let threads = threads_from_env()?;
    let rows = run_grid(&grid, threads)?;
    if rows.iter().all(|r| r.is_failure()) {
        return Err(CliError::AllCellsFailed);
    }
    emit_report(&rows, dir)?;
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    write_table(&mut lock, &rows)?;
    writeln!(lock, "wrote {} rows to {}", rows.len(), dir.display())?;
    Ok(EXIT_OK)
}

pub fn gen(output: &Path, scores: Option<&Path>, cfg: &ResolvedConfig) -> Result<u8, CliError> {
    let synth = SynthConfig {
        n: cfg.gen.n,
        p: cfg.gen.p,
        noise_sigma: cfg.gen.sigma,
        seed: cfg.seed,
        ..SynthConfig::default()
    };
    let (truth, obs) = generate(&synth)?;
    let mut w = create(output)?;
    write_sparse(&mut w, &obs)?;
    finish(w)?;
    if let Some(path) = scores {
        let mut w = create(path)?;
        write_scores(&mut w, &truth)?;
        finish(w)?;
    }
    println!("generated n = {} with {} observed pairs", obs.n(), obs.len());
    Ok(EXIT_OK)
}
