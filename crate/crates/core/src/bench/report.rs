//! Report CSV, text summary and plottable figure data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ExperimentResult, Method};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

pub const REPORT_FILE: &str = "report.csv";
pub const FIG_RMSE_VS_P: &str = "fig_rmse_vs_p.csv";
pub const FIG_TAU_VS_P: &str = "fig_tau_vs_p.csv";
pub const FIG_TIME_VS_EDGES: &str = "fig_time_vs_edges.csv";

/// Median of the non-NaN values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Medians over the seeds of one `(n, p, method)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub p: f64,
    pub method: Method,
    pub runs: usize,
    pub failures: usize,
    pub edges: f64,
    pub time_s: f64,
    pub rmse: f64,
    pub tau: f64,
}

/// Per-cell medians, ordered by `(n, p, method)`.
pub fn summarize(rows: &[ExperimentResult]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, f64, Method)> = rows.iter().map(|r| (r.n, r.p, r.method)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keys.dedup();
    keys.into_iter()
        .map(|(n, p, method)| {
            let cell: Vec<&ExperimentResult> = rows
                .iter()
                .filter(|r| r.n == n && r.p == p && r.method == method)
                .collect();
            let ok: Vec<&&ExperimentResult> = cell.iter().filter(|r| !r.is_failure()).collect();
            let col = |f: fn(&ExperimentResult) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                n,
                p,
                method,
                runs: cell.len(),
                failures: cell.len() - ok.len(),
                edges: col(|r| r.edge_count as f64),
                time_s: col(|r| r.wall_time_s),
                rmse: col(|r| r.rmse),
                tau: col(|r| r.kendall_tau),
            }
        })
        .collect()
}

/// One CSV row per run: `n,p,edges,method,time_s,peak_mem,rmse,tau,seed`.
pub fn write_report<W: Write>(mut w: W, rows: &[ExperimentResult]) -> Result<()> {
    writeln!(w, "n,p,edges,method,time_s,peak_mem,rmse,tau,seed")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_f64(r.p),
            r.edge_count,
            r.method.name(),
            fmt_f64(r.wall_time_s),
            r.peak_mem_bytes.map(|b| b.to_string()).unwrap_or_default(),
            fmt_f64(r.rmse),
            fmt_f64(r.kendall_tau),
            r.seed
        )?;
    }
    Ok(())
}

/// Aligned text table of the per-cell medians.
pub fn write_table<W: Write>(mut w: W, rows: &[ExperimentResult]) -> Result<()> {
    writeln!(
        w,
        "{:>7} {:>7} {:>9} {:>13} {:>10} {:>8} {:>8} {:>5}",
        "n", "p", "edges", "method", "time_s", "rmse", "tau", "fail"
    )?;
    for c in summarize(rows) {
        writeln!(
            w,
            "{:>7} {:>7} {:>9.0} {:>13} {:>10.3} {:>8.4} {:>8.4} {:>5}",
            c.n,
            c.p,
            c.edges,
            c.method.name(),
            c.time_s,
            c.rmse,
            c.tau,
            c.failures
        )?;
    }
    Ok(())
}

fn write_vs_p<W: Write>(mut w: W, rows: &[ExperimentResult], metric: &str, pick: fn(&CellSummary) -> f64) -> Result<()> {
    let mut cells = summarize(rows);
    cells.sort_by(|a, b| a.n.cmp(&b.n).then(a.method.cmp(&b.method)).then(a.p.total_cmp(&b.p)));
    writeln!(w, "n,method,p,{metric}")?;
    for c in &cells {
        writeln!(w, "{},{},{},{}", c.n, c.method.name(), fmt_f64(c.p), fmt_f64(pick(c)))?;
    }
    Ok(())
}

/// Median RMSE per `(n, method)` series against `p`: `n,method,p,rmse`.
pub fn write_fig_rmse_vs_p<W: Write>(w: W, rows: &[ExperimentResult]) -> Result<()> {
    write_vs_p(w, rows, "rmse", |c| c.rmse)
}

/// Median tau per `(n, method)` series against `p`: `n,method,p,tau`.
pub fn write_fig_tau_vs_p<W: Write>(w: W, rows: &[ExperimentResult]) -> Result<()> {
    write_vs_p(w, rows, "tau", |c| c.tau)
}

/// Fit time of every run, ascending by edge count:
/// `edges,n,p,method,seed,time_s`.
pub fn write_fig_time_vs_edges<W: Write>(mut w: W, rows: &[ExperimentResult]) -> Result<()> {
    let mut sorted: Vec<&ExperimentResult> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.edge_count
            .cmp(&b.edge_count)
            .then(a.n.cmp(&b.n))
            .then(a.p.total_cmp(&b.p))
            .then(a.method.cmp(&b.method))
            .then(a.seed.cmp(&b.seed))
    });
    writeln!(w, "edges,n,p,method,seed,time_s")?;
    for r in sorted {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.edge_count,
            r.n,
            fmt_f64(r.p),
            r.method.name(),
            r.seed,
            fmt_f64(r.wall_time_s)
        )?;
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Write the report and the three figure files into `dir` (created if
/// missing); returns the written paths.
pub fn emit_report(rows: &[ExperimentResult], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no benchmark rows to report".into()));
    }
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [REPORT_FILE, FIG_RMSE_VS_P, FIG_TAU_VS_P, FIG_TIME_VS_EDGES]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_file(&paths[0], |w| write_report(w, rows))?;
    write_file(&paths[1], |w| write_fig_rmse_vs_p(w, rows))?;
    write_file(&paths[2], |w| write_fig_tau_vs_p(w, rows))?;
    write_file(&paths[3], |w| write_fig_time_vs_edges(w, rows))?;
    Ok(paths)
}
