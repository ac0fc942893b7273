//! Log-least-squares completion.
//!
//! Minimizes `sum (x_i - x_j - log a_ij)^2` over observed pairs. The normal
//! equations are `L x = b` with `L` the Laplacian of the comparison graph, which
//! is solved by Jacobi-preconditioned conjugate gradients and then gauge fixed
//! to zero mean on each connected component.

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{center_per_group, component_labels, component_sizes};
use crate::pcm::{complete_from_scores, ComparisonSet, DensePcm, ObservationMode, ScoreVector};

pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Requested gauge for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeMode {
    /// Zero mean over all nodes; falls back to per-component when disconnected.
    Global,
    PerComponent,
}

/// Normal equations `L x = b` of a log-least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSystem {
    n: usize,
    /// `(row, col, value)` sorted row-major, diagonal included.
    triplets: Vec<(usize, usize, f64)>,
    row_offsets: Vec<usize>,
    rhs: Vec<f64>,
    component_labels: Vec<usize>,
    component_count: usize,
}

impl LaplacianSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn component_labels(&self) -> &[usize] {
        &self.component_labels
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Dense copy of `L`, for diagnostics and small-system checks.
    pub fn dense_laplacian(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(r, c, v) in &self.triplets {
            m[r][c] += v;
        }
        m
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(r, c, v) in &self.triplets {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in out.iter_mut().enumerate() {
            *o = self.triplets[self.row_offsets[row]..self.row_offsets[row + 1]]
                .iter()
                .map(|&(_, c, v)| v * x[c])
                .sum();
        }
    }
}

/// Build the normal equations from cardinal observations.
///
/// Each undirected pair contributes once; when both `(i, j)` and `(j, i)` are
/// observed their log targets are averaged, i.e. the geometric mean of
/// `a_ij` and `1 / a_ji` is used.
pub fn assemble(obs: &ComparisonSet) -> Result<LaplacianSystem> {
    if obs.mode() == ObservationMode::BinaryCounts {
        return Err(Error::InvalidInput(
            "log-least-squares needs cardinal ratios; fit win counts with the BTL solver".into(),
        ));
    }
    let oriented: Vec<(usize, usize, f64)> = obs
        .edges()
        .iter()
        .map(|e| {
            let y = e.value.ln();
            if e.i < e.j {
                (e.i, e.j, y)
            } else {
                (e.j, e.i, -y)
            }
        })
        .collect();
    Ok(assemble_log_targets(obs.n(), merge_directions(oriented)))
}

fn merge_directions(mut oriented: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    oriented.sort_by_key(|a| (a.0, a.1));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(oriented.len());
    let mut count = 0usize;
    for (i, j, y) in oriented {
        match merged.last_mut() {
            Some(last) if last.0 == i && last.1 == j => {
                count += 1;
                // running mean of the log targets for this pair
                last.2 += (y - last.2) / count as f64;
            }
            _ => {
                merged.push((i, j, y));
                count = 1;
            }
        }
    }
    merged
}

/// Build `L` and `b` from undirected constraints `x_i - x_j ~ y`, one per pair.
pub fn assemble_log_targets(n: usize, constraints: Vec<(usize, usize, f64)>) -> LaplacianSystem {
    let mut rhs = vec![0.0; n];
    let mut degree = vec![0.0; n];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, y) in &constraints {
        degree[i] += 1.0;
        degree[j] += 1.0;
        neighbors[i].push(j);
        neighbors[j].push(i);
        rhs[i] += y;
        rhs[j] -= y;
    }
    let mut triplets = Vec::with_capacity(n + 2 * constraints.len());
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    for (row, nb) in neighbors.iter_mut().enumerate() {
        nb.sort_unstable();
        let mut diag_done = false;
        for &c in nb.iter() {
            if !diag_done && c > row {
                triplets.push((row, row, degree[row]));
                diag_done = true;
            }
            triplets.push((row, c, -1.0));
        }
        if !diag_done {
            triplets.push((row, row, degree[row]));
        }
        row_offsets.push(triplets.len());
    }
    let (component_labels, component_count) =
        component_labels(n, constraints.iter().map(|&(i, j, _)| (i, j)));
    LaplacianSystem {
        n,
        triplets,
        row_offsets,
        rhs,
        component_labels,
        component_count,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `L x = b` by preconditioned conjugate gradients.
///
/// Stops once `|L x - b| <= tol |b|`. Isolated nodes keep score 0 and scores
/// are centered per connected component.
pub fn solve(sys: &LaplacianSystem, gauge: GaugeMode, tol: f64, max_iter: usize) -> Result<ScoreVector> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = sys.n;
    let labels = &sys.component_labels;
    let count = sys.component_count;
    if count > 1 {
        let sizes = component_sizes(labels, count);
        let mut shown: Vec<String> = sizes.iter().take(20).map(|s| s.to_string()).collect();
        if sizes.len() > 20 {
            shown.push("...".into());
        }
        warn!(
            "comparison graph has {count} components (sizes {}); scores are zero-mean per component",
            shown.join(", ")
        );
        if gauge == GaugeMode::Global {
            warn!("global gauge is not identifiable on a disconnected graph");
        }
    }

    // b lies in range(L) exactly only in exact arithmetic.
    let mut b = sys.rhs.clone();
    if n > 0 {
        center_per_group(&mut b, labels, count);
    }
    let b_norm = norm(&b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(ScoreVector::centered_per_component(x, labels.clone()));
    }

    let inv_diag: Vec<f64> = sys
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    let mut converged = false;
    for _ in 0..max_iter {
        sys.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = norm(&r) / b_norm;
        if rel <= tol {
            converged = true;
            break;
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    if !converged {
        return Err(Error::CgNotConverged {
            iterations: max_iter,
            relative_residual: rel,
        });
    }
    Ok(ScoreVector::centered_per_component(x, labels.clone()))
}

/// Default iteration cap for CG: `20 n`.
pub fn default_max_iter(n: usize) -> usize {
    (20 * n).max(20)
}

/// Assemble and solve with default settings.
pub fn lls_scores(obs: &ComparisonSet) -> Result<ScoreVector> {
    let sys = assemble(obs)?;
    solve(&sys, GaugeMode::Global, DEFAULT_CG_TOL, default_max_iter(sys.n()))
}

/// Scores plus the consistent dense completion `exp(x_i - x_j)`.
pub fn lls_complete(obs: &ComparisonSet) -> Result<(ScoreVector, DensePcm)> {
    let x = lls_scores(obs)?;
    let pcm = complete_from_scores(&x)?;
    Ok((x, pcm))
}

/// The least-squares objective at `x`.
pub fn objective(x: &[f64], obs: &ComparisonSet) -> f64 {
    obs.edges()
        .iter()
        .map(|e| (x[e.i] - x[e.j] - e.value.ln()).powi(2))
        .sum()
}
