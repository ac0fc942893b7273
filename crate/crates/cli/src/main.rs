//! `pcm`: validate, complete and rank pairwise comparison data, generate
//! synthetic data and run benchmark grids.
//!
//! Exit codes: 0 success, 1 validation failure, 2 parse or usage error,
//! 3 resource guard, 4 model or solver failure.

// `!(x <= tol)` is used on purpose so that NaN fails validation checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{MethodName, ModelArgs, ResolvedConfig, Trainer};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pcm", version, about = "Sparse pairwise comparison matrix completion and ranking")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// JSON configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dense or sparse PCM file; dense input also gets a
    /// consistency report. Exits 1 when the data are invalid.
    Validate {
        file: PathBuf,
        /// Relative tolerance of the reciprocity check.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Complete a sparse PCM into a dense reciprocal matrix plus scores.
    Complete {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodName>,
        #[arg(long, value_enum)]
        trainer: Option<Trainer>,
        /// Completed matrix (dense CSV, or `i,j,value` with --sparse-output).
        #[arg(short, long)]
        output: PathBuf,
        /// Scores file `i,score`; defaults to `<output stem>.scores.csv`.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Write predictions for the observed pairs only instead of a dense
        /// matrix; required above the dense limit.
        #[arg(long)]
        sparse_output: bool,
        /// Largest n for which a dense matrix is written.
        #[arg(long)]
        dense_limit: Option<usize>,
        /// Save the trained model (method ml).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Write the loss trace CSV (method ml).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Rank alternatives: `rank,i,score`, best first.
    Rank {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodName>,
        #[arg(long, value_enum)]
        trainer: Option<Trainer>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Ridge strength for BTL; needed when some item is never beaten.
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run a benchmark grid and write the report and figure data files.
    Bench {
        /// Comma-separated numbers of alternatives.
        #[arg(long = "n", value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Comma-separated edge probabilities.
        #[arg(long = "p", value_delimiter = ',')]
        p: Option<Vec<f64>>,
        /// Comma-separated methods: lls, ml, ml-minibatch.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Seeds 0..k per cell.
        #[arg(long)]
        seeds: Option<u64>,
        /// Log-space noise standard deviation.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum)]
        trainer: Option<Trainer>,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Generate a synthetic sparse PCM file.
    Gen {
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long = "p")]
        p: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the true scores `i,score`.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<ResolvedConfig, CliError> {
    let mut cfg = ResolvedConfig::from_file(cli.config.as_deref())?;
    match &cli.command {
        Command::Validate { tol, .. } => {
            if let Some(t) = tol {
                cfg.tol = *t;
            }
        }
        Command::Complete {
            method,
            trainer,
            dense_limit,
            seed,
            model,
            ..
        } => {
            if let Some(m) = method {
                cfg.method = *m;
            }
            if let Some(t) = trainer {
                cfg.trainer = *t;
            }
            if let Some(l) = dense_limit {
                cfg.dense_limit = *l;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            model.apply(&mut cfg);
        }
        Command::Rank {
            method,
            trainer,
            l2,
            seed,
            model,
            ..
        } => {
            if let Some(m) = method {
                cfg.method = *m;
            }
            if let Some(t) = trainer {
                cfg.trainer = *t;
            }
            if let Some(v) = l2 {
                cfg.l2 = *v;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            model.apply(&mut cfg);
        }
        Command::Bench {
            n,
            p,
            methods,
            seeds,
            sigma,
            trainer,
            model,
            ..
        } => {
            if let Some(v) = n {
                cfg.bench.n = v.clone();
            }
            if let Some(v) = p {
                cfg.bench.p = v.clone();
            }
            if let Some(v) = methods {
                cfg.bench.methods = v.clone();
            }
            if let Some(v) = seeds {
                cfg.bench.seeds = *v;
            }
            if let Some(v) = sigma {
                cfg.bench.sigma = *v;
            }
            if let Some(t) = trainer {
                cfg.trainer = *t;
            }
            model.apply(&mut cfg);
        }
        Command::Gen { n, p, sigma, seed, .. } => {
            if let Some(v) = n {
                cfg.gen.n = *v;
            }
            if let Some(v) = p {
                cfg.gen.p = *v;
            }
            if let Some(v) = sigma {
                cfg.gen.sigma = *v;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let cfg = resolve(cli)?;
    if cli.dump_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        // A closed pipe (e.g. `| head`) is not an error for a dump.
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(0);
    }
    match &cli.command {
        Command::Validate { file, .. } => commands::validate(file, &cfg),
        Command::Complete {
            file,
            output,
            scores,
            sparse_output,
            checkpoint,
            trace,
            ..
        } => commands::complete(
            &cfg,
            &commands::CompleteOutputs {
                input: file,
                output,
                scores: scores.as_deref(),
                sparse: *sparse_output,
                checkpoint: checkpoint.as_deref(),
                trace: trace.as_deref(),
            },
        ),
        Command::Rank { file, output, .. } => commands::rank(file, output.as_deref(), &cfg),
        Command::Bench { output, .. } => commands::bench(output, &cfg),
        Command::Gen { output, scores, .. } => commands::gen(output, scores.as_deref(), &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
