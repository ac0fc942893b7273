//! CSV file formats.
//!
//! - sparse ratios: header `i,j,value`, 0-based ids, one ordered pair per line
//!   (reciprocal counterparts optional);
//! - win counts: header `i,j,wins_i,wins_j`;
//! - dense matrices: `n` rows of `n` comma-separated values, no header;
//! - scores: `i,score`; rankings: `rank,i,score`.
//!
//! Floats are written with the shortest representation that round-trips
//! exactly, which carries at least as many significant digits as the value
//! holds (never fewer than needed to reproduce it bit for bit).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::pcm::{Comparison, ComparisonSet, DensePcm, ObservationMode, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    SparseRatios,
    WinCounts,
    Dense,
}

/// Format a float so that parsing it back yields the same bits.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Guess the file kind from its first non-empty line.
pub fn detect_kind<R: BufRead>(reader: R) -> Result<FileKind> {
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<String> = t.split(',').map(|f| f.trim().to_ascii_lowercase()).collect();
        return Ok(match fields.as_slice() {
            [a, b, c] if a == "i" && b == "j" && c == "value" => FileKind::SparseRatios,
            [a, b, c, d] if a == "i" && b == "j" && c == "wins_i" && d == "wins_j" => {
                FileKind::WinCounts
            }
            _ => FileKind::Dense,
        });
    }
    Err(Error::Parse {
        line: 1,
        message: "file is empty".into(),
    })
}

pub fn detect_kind_path(path: &Path) -> Result<FileKind> {
    detect_kind(BufReader::new(File::open(path)?))
}

fn reader<R: Read>(r: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, what: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(k).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field `{what}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{raw}` as {what}"),
    })
}

fn check_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let h = r.headers().map_err(csv_error)?;
    let got: Vec<String> = h.iter().map(|s| s.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn check_width(rec: &csv::StringRecord, width: usize) -> Result<()> {
    if rec.len() != width {
        return Err(Error::Parse {
            line: rec.position().map_or(0, |p| p.line()),
            message: format!("expected {width} fields, found {}", rec.len()),
        });
    }
    Ok(())
}

/// Rows of a sparse ratio file, not yet validated: `(line, i, j, value)`.
pub fn read_sparse_rows<R: Read>(r: R) -> Result<Vec<(u64, usize, usize, f64)>> {
    let mut rdr = reader(r, true);
    check_header(&mut rdr, &["i", "j", "value"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        check_width(&rec, 3)?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, field(&rec, 0, "i")?, field(&rec, 1, "j")?, field(&rec, 2, "value")?));
    }
    Ok(rows)
}

fn n_from_ids(ids: impl Iterator<Item = usize>, n: Option<usize>) -> usize {
    let needed = ids.map(|v| v + 1).max().unwrap_or(0);
    n.map_or(needed, |n| n.max(needed))
}

/// Cardinal observations; `n` defaults to the largest id plus one.
pub fn read_sparse<R: Read>(r: R, n: Option<usize>) -> Result<ComparisonSet> {
    let rows = read_sparse_rows(r)?;
    let n = n_from_ids(rows.iter().flat_map(|&(_, i, j, _)| [i, j]), n);
    for &(line, i, j, v) in &rows {
        if i == j || !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("invalid comparison ({i}, {j}) = {v}"),
            });
        }
    }
    ComparisonSet::new(
        n,
        ObservationMode::Cardinal,
        rows.into_iter().map(|(_, i, j, value)| Comparison { i, j, value }).collect(),
    )
}

pub fn read_counts<R: Read>(r: R, n: Option<usize>) -> Result<ComparisonSet> {
    let mut rdr = reader(r, true);
    check_header(&mut rdr, &["i", "j", "wins_i", "wins_j"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        check_width(&rec, 4)?;
        let i: usize = field(&rec, 0, "i")?;
        let j: usize = field(&rec, 1, "j")?;
        if i == j {
            return Err(Error::Parse {
                line: rec.position().map_or(0, |p| p.line()),
                message: format!("self comparison at node {i}"),
            });
        }
        rows.push((i, j, field::<u64>(&rec, 2, "wins_i")?, field::<u64>(&rec, 3, "wins_j")?));
    }
    let n = n_from_ids(rows.iter().flat_map(|&(i, j, _, _)| [i, j]), n);
    ComparisonSet::counts(n, rows)
}

/// A dense matrix as written, diagonal untouched.
pub fn read_dense_raw<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut rdr = reader(r, false);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let row = (0..rec.len())
            .map(|k| field::<f64>(&rec, k, "number"))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                check_width(&rec, first.len())?;
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no rows".into(),
        });
    }
    if rows[0].len() != n {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected a square matrix, found {n} rows of {} columns", rows[0].len()),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, n), flat).map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_dense<R: Read>(r: R) -> Result<DensePcm> {
    DensePcm::new(read_dense_raw(r)?)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidInput(format!("{other:?}")),
    }
}

pub fn write_dense<W: Write>(w: W, pcm: &DensePcm) -> Result<()> {
    let mut w = writer(w);
    for row in pcm.entries().rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_io)?;
    }
    flush(w)
}

pub fn write_sparse<W: Write>(w: W, obs: &ComparisonSet) -> Result<()> {
    let mut w = writer(w);
    let header = match obs.mode() {
        ObservationMode::Cardinal => ["i", "j", "value"],
        ObservationMode::BinaryCounts => ["i", "j", "wins"],
    };
    w.write_record(header).map_err(csv_io)?;
    for e in obs.edges() {
        w.write_record([e.i.to_string(), e.j.to_string(), fmt_f64(e.value)]).map_err(csv_io)?;
    }
    flush(w)
}

/// `i,j,value` rows for an explicit list of predicted ratios.
pub fn write_pairs<W: Write>(w: W, pairs: &[(usize, usize, f64)]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["i", "j", "value"]).map_err(csv_io)?;
    for &(i, j, v) in pairs {
        w.write_record([i.to_string(), j.to_string(), fmt_f64(v)]).map_err(csv_io)?;
    }
    flush(w)
}

pub fn write_scores<W: Write>(w: W, x: &ScoreVector) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["i", "score"]).map_err(csv_io)?;
    for (i, s) in x.scores().iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(*s)]).map_err(csv_io)?;
    }
    flush(w)
}

/// Items sorted by descending score, ties broken by ascending id.
pub fn ranking(x: &ScoreVector) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = x.scores().iter().copied().enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

pub fn write_ranking<W: Write>(w: W, x: &ScoreVector) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["rank", "i", "score"]).map_err(csv_io)?;
    for (rank, (i, s)) in ranking(x).into_iter().enumerate() {
        w.write_record([(rank + 1).to_string(), i.to_string(), fmt_f64(s)]).map_err(csv_io)?;
    }
    flush(w)
}
